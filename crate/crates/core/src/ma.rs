//! Weight-prediction network mapping auto-encoder codes to per-sample weights.

use alloc::format;
use alloc::vec::Vec;

use crate::dae::CODE_WIDTH;
use crate::neural::{Activation, NetworkModel, TrainingConfig, TrainingReport};
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: [usize; 6] = [24, 32, 40, 40, 44, 48];

#[derive(Debug, Clone, PartialEq)]
pub struct MaReductionSpec {
    pub output_width: usize,
    pub hidden_widths: [usize; 6],
    pub hidden_activation: Activation,
    pub training: TrainingConfig,
    /// Predictions are clamped to the teacher's search bounds.
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl MaReductionSpec {
    pub fn new(output_width: usize) -> Self {
        Self {
            output_width,
            hidden_widths: DEFAULT_HIDDEN,
            hidden_activation: Activation::Tanh,
            training: TrainingConfig {
                learning_rate: 0.02,
                max_epochs: 400,
                dropout_rate: 0.2,
                early_stop_loss: 1e-3,
                seed: 0,
                fold_count: 6,
            },
            lower_bound: 0.2,
            upper_bound: 5.0,
        }
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(8);
        w.push(CODE_WIDTH);
        w.extend_from_slice(&self.hidden_widths);
        w.push(self.output_width);
        w
    }
}

pub fn train_ma_model(
    features: &[Vec<f64>],
    weights: &[Vec<f64>],
    spec: &MaReductionSpec,
) -> Result<(NetworkModel, TrainingReport)> {
    if features.len() != weights.len() {
        return Err(Error::shape("weight-model pairs", features.len(), weights.len()));
    }
    if spec.output_width == 0 || !(spec.lower_bound < spec.upper_bound) {
        return Err(Error::Parameter("invalid weight-model output or bounds".into()));
    }
    let mut model = NetworkModel::new(&spec.layer_widths(), spec.hidden_activation, Activation::Identity, spec.training.seed)?;
    // start exactly at the identity weighting
    model.weights_mut().last_mut().into_iter().flatten().for_each(|w| *w = 0.0);
    model.biases_mut().last_mut().into_iter().flatten().for_each(|b| *b = 1.0);
    let report = model.train_backprop(features, weights, &spec.training)?;
    Ok((model, report))
}

/// Feedforward prediction clamped to `[lower, upper]`.
pub fn predict_weights(model: &NetworkModel, features: &[f64], lower: f64, upper: f64) -> Result<Vec<f64>> {
    if model.input_width() != CODE_WIDTH {
        return Err(Error::Parameter(format!(
            "weight model takes {} inputs instead of {CODE_WIDTH}",
            model.input_width()
        )));
    }
    Ok(model.forward(features)?.into_iter().map(|w| w.clamp(lower, upper)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn features(k: usize) -> Vec<f64> {
        (0..CODE_WIDTH).map(|i| libm::sin((i * 7 + k * 3) as f64 * 0.37) * 0.5 + 0.5).collect()
    }

    #[test]
    fn single_pair_is_reproduced() {
        let mut spec = MaReductionSpec::new(10);
        spec.training.dropout_rate = 0.0;
        spec.training.max_epochs = 3000;
        spec.training.early_stop_loss = 1e-6;
        let target: Vec<f64> = (0..10).map(|i| 0.8 + 0.05 * i as f64).collect();
        let (m, _) = train_ma_model(&[features(0)], core::slice::from_ref(&target), &spec).unwrap();
        let p = predict_weights(&m, &features(0), 0.2, 5.0).unwrap();
        assert!(p.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-2), "{p:?}");
    }

    #[test]
    fn constant_targets_are_learned() {
        let spec = MaReductionSpec::new(8);
        let fs: Vec<Vec<f64>> = (0..10).map(features).collect();
        let (m, _) = train_ma_model(&fs, &vec![vec![1.0; 8]; 10], &spec).unwrap();
        for f in &fs {
            let p = predict_weights(&m, f, 0.2, 5.0).unwrap();
            assert_eq!(p.len(), 8);
            assert!(p.iter().all(|w| (w - 1.0).abs() < 1e-2), "{p:?}");
            assert_eq!(p, predict_weights(&m, f, 0.2, 5.0).unwrap());
        }
    }

    #[test]
    fn predictions_are_clamped() {
        let spec = MaReductionSpec::new(3);
        let mut m = NetworkModel::zeros(&spec.layer_widths(), Activation::Sigmoid, Activation::Identity).unwrap();
        m.biases_mut().last_mut().unwrap().copy_from_slice(&[-3.0, 1.0, 9.0]);
        assert_eq!(predict_weights(&m, &features(0), 0.2, 5.0).unwrap(), vec![0.2, 1.0, 5.0]);
    }

    #[test]
    fn mismatched_pairs_rejected() {
        let spec = MaReductionSpec::new(3);
        assert!(train_ma_model(&[features(0)], &[], &spec).is_err());
    }
}
