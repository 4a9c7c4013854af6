//! Beat-quality classification, reference templates and the recalibration
//! trigger.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::evaluation::{positive_predictivity, roc_auc, sensitivity, ClassificationCounts};
use crate::math;
use crate::neural::{Activation, NetworkModel, TrainingConfig};
use crate::{Error, Result};

pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;
pub const DEFAULT_GLOBAL_BLEND: f64 = 0.25;
pub const DEFAULT_RECAL_THRESHOLD: f64 = 0.7;
pub const HIDDEN_LAYERS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeatLabel {
    pub noisy: bool,
    /// Probability of the noisy class.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    /// Six hidden widths; `None` tapers geometrically from `n` toward 2.
    pub hidden_widths: Option<Vec<usize>>,
    pub hidden_activation: Activation,
    pub training: TrainingConfig,
    pub decision_threshold: f64,
    /// Larger class over smaller class, above which training is refused.
    pub max_imbalance: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden_widths: None,
            hidden_activation: Activation::Tanh,
            training: TrainingConfig {
                learning_rate: 0.05,
                max_epochs: 300,
                dropout_rate: 0.0,
                early_stop_loss: 1e-3,
                seed: 0,
                fold_count: 6,
            },
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
            max_imbalance: 10.0,
        }
    }
}

/// Six widths shrinking geometrically from `n` to 2, each at least 2.
pub fn classifier_widths(n: usize) -> Vec<usize> {
    let ratio = math::powf(2.0 / n.max(2) as f64, 1.0 / (HIDDEN_LAYERS + 1) as f64);
    (1..=HIDDEN_LAYERS)
        .map(|i| (math::round_half_up(n as f64 * math::powf(ratio, i as f64)) as usize).max(2))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub test_indices: Vec<usize>,
    pub counts: ClassificationCounts,
    /// `None` where the denominator is zero in this fold.
    pub sensitivity: Option<f64>,
    pub positive_predictivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidationReport {
    pub folds: Vec<FoldReport>,
    /// Mean over folds where the metric is defined.
    pub mean_sensitivity: Option<f64>,
    pub mean_positive_predictivity: Option<f64>,
    pub pooled: ClassificationCounts,
    /// Out-of-fold score per sample, in input order (clean first).
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub model: NetworkModel,
    pub report: CrossValidationReport,
}

fn fit(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    n: usize,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<NetworkModel> {
    let mut widths = vec![n];
    widths.extend(config.hidden_widths.clone().unwrap_or_else(|| classifier_widths(n)));
    widths.push(1);
    let mut model = NetworkModel::new(&widths, config.hidden_activation, Activation::Sigmoid, seed)?;
    let training = TrainingConfig {
        seed,
        ..config.training.clone()
    };
    model.train_backprop(inputs, targets, &training)?;
    Ok(model)
}

/// Trains the noisy-vs-clean classifier with stratified cross-validation
/// and returns the model refit on all beats.
pub fn train_classifier(
    clean: &[Vec<f64>],
    noisy: &[Vec<f64>],
    config: &ClassifierConfig,
) -> Result<TrainedClassifier> {
    if clean.is_empty() || noisy.is_empty() {
        return Err(Error::Training("both classes need at least one beat".into()));
    }
    let n = clean[0].len();
    if let Some(b) = clean.iter().chain(noisy).find(|b| b.len() != n) {
        return Err(Error::shape("classifier beat", n, b.len()));
    }
    if let Some(w) = &config.hidden_widths {
        if w.len() != HIDDEN_LAYERS {
            return Err(Error::shape("classifier hidden layers", HIDDEN_LAYERS, w.len()));
        }
    }
    let (big, small) = (clean.len().max(noisy.len()), clean.len().min(noisy.len()));
    if big as f64 > config.max_imbalance * small as f64 {
        return Err(Error::Training(format!(
            "class imbalance {} clean vs {} noisy exceeds {}:1; resample the smaller class",
            clean.len(),
            noisy.len(),
            config.max_imbalance
        )));
    }
    let inputs: Vec<Vec<f64>> = clean.iter().chain(noisy).cloned().collect();
    let labels: Vec<bool> = (0..inputs.len()).map(|i| i >= clean.len()).collect();
    let targets: Vec<Vec<f64>> = labels.iter().map(|&l| vec![if l { 1.0 } else { 0.0 }]).collect();
    let seed = config.training.seed;

    let k = config.training.fold_count.min(small).max(2);
    let folds = stratified_folds(&labels, k, seed);
    let mut scores = vec![f64::NAN; inputs.len()];
    let mut fold_reports = Vec::with_capacity(k);
    for (f, test) in folds.iter().enumerate() {
        let mut in_test = vec![false; inputs.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..inputs.len()).filter(|&i| !in_test[i]).collect();
        let xs: Vec<Vec<f64>> = train.iter().map(|&i| inputs[i].clone()).collect();
        let ts: Vec<Vec<f64>> = train.iter().map(|&i| targets[i].clone()).collect();
        let model = if xs.is_empty() {
            // a single fold holds everything; nothing to train on
            NetworkModel::zeros(&[n, 1], Activation::Identity, Activation::Sigmoid)?
        } else {
            fit(&xs, &ts, n, config, seed.wrapping_add(1 + f as u64))?
        };
        let mut pred = Vec::with_capacity(test.len());
        let mut actual = Vec::with_capacity(test.len());
        for &i in test {
            let l = classify_beat(&model, &inputs[i], config.decision_threshold)?;
            scores[i] = l.score;
            pred.push(l.noisy);
            actual.push(labels[i]);
        }
        let counts = ClassificationCounts::from_predictions(&pred, &actual)?;
        fold_reports.push(FoldReport {
            test_indices: test.clone(),
            counts,
            sensitivity: sensitivity(&counts).ok(),
            positive_predictivity: positive_predictivity(&counts).ok(),
        });
    }
    let mean_of = |f: fn(&FoldReport) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = fold_reports.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| math::mean(&v))
    };
    let pooled = fold_reports
        .iter()
        .fold(ClassificationCounts::default(), |acc, f| acc.merge(&f.counts));
    let auc = roc_auc(&scores, &labels)?.auc;
    let report = CrossValidationReport {
        mean_sensitivity: mean_of(|f| f.sensitivity),
        mean_positive_predictivity: mean_of(|f| f.positive_predictivity),
        folds: fold_reports,
        pooled,
        scores,
        labels,
        auc,
    };
    let model = fit(&inputs, &targets, n, config, seed)?;
    Ok(TrainedClassifier { model, report })
}

/// Splits indices into `k` folds, shuffling each class separately and
/// dealing its members round-robin so every fold keeps the class ratio.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

pub fn classify_beat(model: &NetworkModel, beat: &[f64], decision_threshold: f64) -> Result<BeatLabel> {
    if model.output_width() != 1 {
        return Err(Error::shape("classifier output", 1, model.output_width()));
    }
    let score = model.forward(beat)?[0];
    Ok(BeatLabel {
        noisy: score >= decision_threshold,
        score,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReferenceTemplate {
    pub t: Vec<f64>,
    /// Number of clean beats averaged.
    pub source_beat_count: usize,
}

/// Mean of the columns labelled clean. Fails with [`Error::NoCleanBeats`]
/// so the caller can fall back to the global template.
pub fn form_reference_template(columns: &[Vec<f64>], labels: &[BeatLabel]) -> Result<ReferenceTemplate> {
    if columns.len() != labels.len() {
        return Err(Error::shape("template labels", columns.len(), labels.len()));
    }
    let clean: Vec<&Vec<f64>> = columns.iter().zip(labels).filter(|(_, l)| !l.noisy).map(|(c, _)| c).collect();
    mean_template(&clean)
}

pub fn mean_template(columns: &[&Vec<f64>]) -> Result<ReferenceTemplate> {
    let first = columns.first().ok_or(Error::NoCleanBeats)?;
    let n = first.len();
    let mut t = vec![0.0; n];
    for c in columns {
        if c.len() != n {
            return Err(Error::shape("template column", n, c.len()));
        }
        t.iter_mut().zip(c.iter()).for_each(|(a, b)| *a += b);
    }
    let g = columns.len();
    t.iter_mut().for_each(|a| *a /= g as f64);
    Ok(ReferenceTemplate {
        t,
        source_beat_count: g,
    })
}

/// `(1 − blend) · global + blend · t`.
pub fn update_global_template(global: &[f64], current: &ReferenceTemplate, blend: f64) -> Result<Vec<f64>> {
    if global.len() != current.t.len() {
        return Err(Error::shape("global template", global.len(), current.t.len()));
    }
    if !(blend > 0.0 && blend <= 1.0) {
        return Err(Error::Parameter(format!("blend {blend} outside (0, 1]")));
    }
    Ok(global
        .iter()
        .zip(&current.t)
        .map(|(g, t)| if blend == 1.0 { *t } else { (1.0 - blend) * g + blend * t })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecalibrationCheck {
    pub needed: bool,
    pub correlation: f64,
}

pub fn needs_recalibration(current: &ReferenceTemplate, global: &[f64], threshold: f64) -> Result<RecalibrationCheck> {
    let correlation = math::pearson(&current.t, global)?;
    Ok(RecalibrationCheck {
        needed: correlation < threshold,
        correlation,
    })
}
