//! Dense feedforward networks trained by backpropagation.
//!
//! One implementation serves the beat-quality classifier, the auto-encoder and
//! the weight-prediction model. Training is plain per-sample stochastic
//! gradient descent on the squared error with inverted dropout on hidden
//! layers. All randomness comes from a seeded ChaCha stream, so equal seeds
//! and data give bitwise-equal parameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-z)),
            Activation::Tanh => libm::tanh(z),
        }
    }

    /// Derivative expressed through the activation value `a = f(z)`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }

    /// `f(u) - f(d)` given `dz = u - d`, without cancellation.
    fn difference(self, u: f64, d: f64, dz: f64) -> f64 {
        match self {
            Activation::Identity => dz,
            Activation::Sigmoid => -self.apply(u) * Activation::Sigmoid.apply(-d) * libm::expm1(-dz),
            Activation::Tanh => libm::tanh(dz) * (1.0 - libm::tanh(u) * libm::tanh(d)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

/// Network parameters. Layer `j` maps width `j` to width `j + 1` with a
/// row-major `width(j+1) x width(j)` weight matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkModel {
    layer_widths: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    /// One entry per weight layer; the last is the output activation.
    activations: Vec<Activation>,
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &NetworkModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter().flatten())
    }
}

impl NetworkModel {
    /// Xavier-uniform weights, zero biases.
    pub fn new(widths: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(widths, hidden, output)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 0..model.weights.len() {
            let (fan_in, fan_out) = (widths[j], widths[j + 1]);
            let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in model.weights[j].iter_mut() {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        Ok(model)
    }

    pub fn zeros(widths: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Parameter(format!(
                "network needs at least two non-empty layers, got {widths:?}"
            )));
        }
        let layers = widths.len() - 1;
        let mut activations = vec![hidden; layers];
        activations[layers - 1] = output;
        Ok(Self {
            layer_widths: widths.to_vec(),
            weights: (0..layers).map(|j| vec![0.0; widths[j] * widths[j + 1]]).collect(),
            biases: (0..layers).map(|j| vec![0.0; widths[j + 1]]).collect(),
            activations,
        })
    }

    /// Builds a model from explicit parameters, checking every shape.
    pub fn from_parts(
        widths: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        let model = Self {
            layer_widths: widths,
            weights,
            biases,
            activations,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.layer_widths;
        if w.len() < 2 || w.contains(&0) {
            return Err(Error::Parameter(format!("invalid layer widths {w:?}")));
        }
        let layers = w.len() - 1;
        if self.weights.len() != layers {
            return Err(Error::shape("weight layers", layers, self.weights.len()));
        }
        if self.biases.len() != layers {
            return Err(Error::shape("bias layers", layers, self.biases.len()));
        }
        if self.activations.len() != layers {
            return Err(Error::shape("activations", layers, self.activations.len()));
        }
        for j in 0..layers {
            if self.weights[j].len() != w[j] * w[j + 1] {
                return Err(Error::shape("weight matrix", w[j] * w[j + 1], self.weights[j].len()));
            }
            if self.biases[j].len() != w[j + 1] {
                return Err(Error::shape("bias vector", w[j + 1], self.biases[j].len()));
            }
        }
        if !self.weights.iter().chain(&self.biases).flatten().all(|v| v.is_finite()) {
            return Err(Error::Numeric("network parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        self.layer_widths[self.layer_widths.len() - 1]
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::shape("network input", self.input_width(), input.len()));
        }
        Ok(())
    }

    fn layer(&self, j: usize, input: &[f64], out: &mut Vec<f64>) {
        let n_in = self.layer_widths[j];
        let act = self.activations[j];
        out.clear();
        for (row, b) in self.weights[j].chunks_exact(n_in).zip(&self.biases[j]) {
            let z = row.iter().zip(input).fold(*b, |s, (w, x)| s + w * x);
            out.push(act.apply(z));
        }
    }

    /// Dropout-free forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for j in 0..self.weights.len() {
            self.layer(j, &cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Activations of every layer, the input included at index 0.
    pub fn forward_layers(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(input)?;
        let mut acts = vec![input.to_vec()];
        for j in 0..self.weights.len() {
            let mut next = Vec::new();
            self.layer(j, &acts[j], &mut next);
            acts.push(next);
        }
        Ok(acts)
    }

    /// Activations of layer `layer` (0 = input) without computing the rest.
    pub fn forward_to(&self, input: &[f64], layer: usize) -> Result<Vec<f64>> {
        self.check_input(input)?;
        if layer >= self.layer_widths.len() {
            return Err(Error::Parameter(format!("layer {layer} out of range")));
        }
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for j in 0..layer {
            self.layer(j, &cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Gradient of `0.5 * |forward(input) - target|^2`.
    pub fn gradients(&self, input: &[f64], target: &[f64]) -> Result<Gradients> {
        self.check_input(input)?;
        if target.len() != self.output_width() {
            return Err(Error::shape("network target", self.output_width(), target.len()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = Scratch::new(self);
        scratch.forward(self, input, None);
        scratch.backward(self, target, &mut grads);
        Ok(grads)
    }

    /// Mean squared error over all samples and outputs.
    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        check_pairs(self, inputs, targets)?;
        let mut total = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            let y = self.forward(x)?;
            total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / (inputs.len() * self.output_width()) as f64)
    }

    /// Trains in place and returns the per-epoch loss.
    ///
    /// The epoch loss is the dropout-free mean squared error over the whole
    /// set, evaluated after each epoch.
    pub fn train_backprop(
        &mut self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        config: &TrainingConfig,
    ) -> Result<TrainingReport> {
        config.validate()?;
        check_pairs(self, inputs, targets)?;
        let initial_loss = self.mse(inputs, targets)?;
        if !initial_loss.is_finite() {
            return Err(Error::Divergence { epoch: 0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = Scratch::new(self);
        let mut history = Vec::with_capacity(config.max_epochs);
        let mut stopped_early = initial_loss < config.early_stop_loss;
        if !stopped_early {
            for epoch in 1..=config.max_epochs {
                order.shuffle(&mut rng);
                for &i in &order {
                    let dropout = (config.dropout_rate > 0.0).then_some((config.dropout_rate, &mut rng));
                    scratch.forward(self, &inputs[i], dropout);
                    scratch.backward(self, &targets[i], &mut grads);
                    self.step(&grads, config.learning_rate);
                }
                let loss = self.mse(inputs, targets)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch });
                }
                history.push(loss);
                if loss < config.early_stop_loss {
                    stopped_early = true;
                    break;
                }
            }
        }
        Ok(TrainingReport {
            initial_loss,
            loss_history: history,
            stopped_early,
        })
    }

    fn step(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.iter_mut().zip(g).for_each(|(b, g)| *b -= lr * g);
        }
    }

    /// Central finite-difference gradient of the half squared error.
    pub fn numeric_gradients(&self, input: &[f64], target: &[f64], step: f64) -> Result<Gradients> {
        self.check_input(input)?;
        if target.len() != self.output_width() {
            return Err(Error::shape("network target", self.output_width(), target.len()));
        }
        // Both perturbed passes are carried as (up, down, up - down) with the
        // difference propagated in closed form, so the central difference is
        // free of cancellation between two nearly equal losses.
        let acts = self.forward_layers(input)?;
        let mut grads = Gradients::zeros_like(self);
        let run = |j: usize, o: usize, dz_o: f64| -> f64 {
            let (w, b) = (&self.weights[j], &self.biases[j]);
            let inw = self.layer_widths[j];
            let z_o = b[o] + (0..inw).map(|i| w[o * inw + i] * acts[j][i]).sum::<f64>();
            let act = self.activations[j];
            let mut up = acts[j + 1].clone();
            let mut down = acts[j + 1].clone();
            let mut diff = vec![0.0; up.len()];
            let (zu, zd) = (z_o + 0.5 * dz_o, z_o - 0.5 * dz_o);
            up[o] = act.apply(zu);
            down[o] = act.apply(zd);
            diff[o] = act.difference(zu, zd, dz_o);
            for k in j + 1..self.weights.len() {
                let (w, b) = (&self.weights[k], &self.biases[k]);
                let (inw, outw) = (self.layer_widths[k], self.layer_widths[k + 1]);
                let act = self.activations[k];
                let mut nu = vec![0.0; outw];
                let mut nd = vec![0.0; outw];
                let mut ndiff = vec![0.0; outw];
                for r in 0..outw {
                    let row = &w[r * inw..(r + 1) * inw];
                    let zu = b[r] + row.iter().zip(&up).map(|(a, x)| a * x).sum::<f64>();
                    let zd = b[r] + row.iter().zip(&down).map(|(a, x)| a * x).sum::<f64>();
                    let dz = row.iter().zip(&diff).map(|(a, x)| a * x).sum::<f64>();
                    nu[r] = act.apply(zu);
                    nd[r] = act.apply(zd);
                    ndiff[r] = act.difference(zu, zd, dz);
                }
                up = nu;
                down = nd;
                diff = ndiff;
            }
            let dloss: f64 =
                (0..up.len()).map(|r| 0.5 * diff[r] * (up[r] + down[r] - 2.0 * target[r])).sum();
            dloss / (2.0 * step)
        };
        for j in 0..self.weights.len() {
            let inw = self.layer_widths[j];
            for idx in 0..self.weights[j].len() {
                let (o, i) = (idx / inw, idx % inw);
                grads.weights[j][idx] = run(j, o, 2.0 * step * acts[j][i]);
            }
            for o in 0..self.biases[j].len() {
                grads.biases[j][o] = run(j, o, 2.0 * step);
            }
        }
        Ok(grads)
    }
}

/// Largest relative discrepancy `|a - n| / max(1e-8, |a| + |n|)`.
pub fn gradient_discrepancy(analytic: &Gradients, numeric: &Gradients) -> f64 {
    analytic
        .values()
        .zip(numeric.values())
        .map(|(a, n)| libm::fabs(a - n) / f64::max(1e-8, libm::fabs(*a) + libm::fabs(*n)))
        .fold(0.0, f64::max)
}

pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

/// Compares backpropagated gradients with central differences.
pub fn gradient_check(model: &NetworkModel, input: &[f64], target: &[f64]) -> Result<f64> {
    model.validate()?;
    let analytic = model.gradients(input, target)?;
    let numeric = model.numeric_gradients(input, target, GRADIENT_CHECK_STEP)?;
    Ok(gradient_discrepancy(&analytic, &numeric))
}

fn check_pairs(model: &NetworkModel, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
    if inputs.len() != targets.len() {
        return Err(Error::shape("training pairs", inputs.len(), targets.len()));
    }
    if inputs.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != model.input_width()) {
        return Err(Error::shape("network input", model.input_width(), x.len()));
    }
    if let Some(t) = targets.iter().find(|t| t.len() != model.output_width()) {
        return Err(Error::shape("network target", model.output_width(), t.len()));
    }
    Ok(())
}

/// Per-layer buffers reused across samples.
struct Scratch {
    /// Post-dropout activations, input at index 0.
    acts: Vec<Vec<f64>>,
    /// Dropout multipliers (0 or 1/keep) per hidden unit; empty when off.
    masks: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(model: &NetworkModel) -> Self {
        let w = &model.layer_widths;
        Self {
            acts: w.iter().map(|&k| vec![0.0; k]).collect(),
            masks: w.iter().map(|_| Vec::new()).collect(),
            deltas: w.iter().map(|&k| vec![0.0; k]).collect(),
        }
    }

    fn forward(&mut self, model: &NetworkModel, input: &[f64], mut dropout: Option<(f64, &mut ChaCha8Rng)>) {
        self.acts[0].copy_from_slice(input);
        let layers = model.weights.len();
        for j in 0..layers {
            let (head, tail) = self.acts.split_at_mut(j + 1);
            model.layer(j, &head[j], &mut tail[0]);
            let mask = &mut self.masks[j + 1];
            mask.clear();
            if j + 1 < layers {
                if let Some((rate, rng)) = dropout.as_mut() {
                    let keep = 1.0 - *rate;
                    for a in tail[0].iter_mut() {
                        let m = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
                        mask.push(m);
                        *a *= m;
                    }
                }
            }
        }
    }

    fn backward(&mut self, model: &NetworkModel, target: &[f64], grads: &mut Gradients) {
        let layers = model.weights.len();
        let out_act = model.activations[layers - 1];
        for ((d, &a), &t) in self.deltas[layers].iter_mut().zip(&self.acts[layers]).zip(target) {
            *d = (a - t) * out_act.derivative_from_output(a);
        }
        for j in (0..layers).rev() {
            let n_in = model.layer_widths[j];
            let (gw, gb) = (&mut grads.weights[j], &mut grads.biases[j]);
            let delta = &self.deltas[j + 1];
            let input = &self.acts[j];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] = d;
                let row = &mut gw[o * n_in..(o + 1) * n_in];
                row.iter_mut().zip(input).for_each(|(g, x)| *g = d * x);
            }
            if j == 0 {
                break;
            }
            let act = model.activations[j - 1];
            let (lower, upper) = self.deltas.split_at_mut(j + 1);
            let down = &mut lower[j];
            let delta = &upper[0];
            down.iter_mut().for_each(|v| *v = 0.0);
            for (o, &d) in delta.iter().enumerate() {
                let row = &model.weights[j][o * n_in..(o + 1) * n_in];
                down.iter_mut().zip(row).for_each(|(v, w)| *v += w * d);
            }
            let mask = &self.masks[j];
            for (i, v) in down.iter_mut().enumerate() {
                let (a, m) = match mask.get(i) {
                    // a stored activation is f(z)*m; recover f(z) for the slope
                    Some(&m) if m > 0.0 => (self.acts[j][i] / m, m),
                    Some(_) => (0.0, 0.0),
                    None => (self.acts[j][i], 1.0),
                };
                *v *= m * act.derivative_from_output(a);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Applied to hidden layers only.
    pub dropout_rate: f64,
    /// Training stops once the epoch loss falls below this value.
    pub early_stop_loss: f64,
    pub seed: u64,
    /// Number of folds for callers that cross-validate.
    pub fold_count: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 500,
            dropout_rate: 0.2,
            early_stop_loss: 0.0,
            seed: 0,
            fold_count: 6,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Parameter(format!(
                "learning rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Parameter(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.early_stop_loss >= 0.0) {
            return Err(Error::Parameter("early-stop loss must be non-negative".into()));
        }
        if self.fold_count < 2 {
            return Err(Error::Parameter("fold count must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Loss of the model before the first update.
    pub initial_loss: f64,
    /// One entry per epoch run.
    pub loss_history: Vec<f64>,
    pub stopped_early: bool,
}

impl TrainingReport {
    pub fn epochs(&self) -> usize {
        self.loss_history.len()
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(self.initial_loss)
    }
}
