//! Funnel-shaped auto-encoder whose narrowest layer provides 12 beat features.

use alloc::format;
use alloc::vec::Vec;

use crate::neural::{Activation, NetworkModel, TrainingConfig, TrainingReport};
use crate::{Error, Result};

pub const CODE_WIDTH: usize = 12;
/// Layer index of the code (the input is layer 0).
pub const CODE_LAYER: usize = 3;
pub const DEFAULT_FUNNEL: [usize; 5] = [32, 20, CODE_WIDTH, 20, 32];

#[derive(Debug, Clone, PartialEq)]
pub struct AutoEncoderSpec {
    pub input_width: usize,
    /// Hidden widths; the middle one must be [`CODE_WIDTH`].
    pub funnel_widths: [usize; 5],
    pub hidden_activation: Activation,
    pub training: TrainingConfig,
}

impl AutoEncoderSpec {
    pub fn new(input_width: usize) -> Self {
        Self {
            input_width,
            funnel_widths: DEFAULT_FUNNEL,
            hidden_activation: Activation::Tanh,
            training: TrainingConfig {
                learning_rate: 0.05,
                max_epochs: 400,
                dropout_rate: 0.0,
                early_stop_loss: 1e-5,
                seed: 0,
                fold_count: 6,
            },
        }
    }

    /// Full layer widths with the outer funnel widths clamped to the input.
    pub fn layer_widths(&self) -> Result<Vec<usize>> {
        let f = self.funnel_widths;
        if f[2] != CODE_WIDTH {
            return Err(Error::shape("code layer", CODE_WIDTH, f[2]));
        }
        let n = self.input_width;
        if n < CODE_WIDTH {
            return Err(Error::Parameter(format!(
                "input width {n} is narrower than the {CODE_WIDTH}-wide code"
            )));
        }
        let outer = |w: usize| w.min(n);
        let widths = [n, outer(f[0]), f[1].min(outer(f[0])), f[2], f[3].min(outer(f[4])), outer(f[4]), n];
        if widths[1..4].windows(2).any(|w| w[1] > w[0]) || widths[3..6].windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter(format!("funnel widths {f:?} do not narrow to the code")));
        }
        Ok(widths.to_vec())
    }

    pub fn build(&self, seed: u64) -> Result<NetworkModel> {
        NetworkModel::new(&self.layer_widths()?, self.hidden_activation, Activation::Identity, seed)
    }
}

/// Self-reconstruction training on the given beats.
pub fn train_autoencoder(beats: &[Vec<f64>], spec: &AutoEncoderSpec) -> Result<(NetworkModel, TrainingReport)> {
    if beats.len() < 4 {
        return Err(Error::Training(format!(
            "auto-encoder needs at least 4 beats, got {}",
            beats.len()
        )));
    }
    let mut model = spec.build(spec.training.seed)?;
    let report = model.train_backprop(beats, beats, &spec.training)?;
    Ok((model, report))
}

fn check_model(model: &NetworkModel) -> Result<()> {
    let w = model.layer_widths();
    if w.len() <= CODE_LAYER || w[CODE_LAYER] != CODE_WIDTH {
        return Err(Error::Parameter(format!(
            "model {w:?} has no {CODE_WIDTH}-wide code layer"
        )));
    }
    Ok(())
}

/// Activations of the code layer.
pub fn encode(model: &NetworkModel, beat: &[f64]) -> Result<Vec<f64>> {
    check_model(model)?;
    model.forward_to(beat, CODE_LAYER)
}

/// Full encode and decode.
pub fn reconstruct(model: &NetworkModel, beat: &[f64]) -> Result<Vec<f64>> {
    check_model(model)?;
    model.forward(beat)
}
