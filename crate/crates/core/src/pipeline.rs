//! Calibration of a subject profile and the deployment rectification path.
//!
//! Calibration trains the beat classifier, runs the swarm teacher on the
//! PCA-reconstructed training beats, and fits the auto-encoder and the
//! weight-prediction network. Deployment never runs the swarm: weights come
//! from the network driven by auto-encoder codes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::beats::{
    self, detect_beats_with, normalize_to_layout, restore_heart_rate, Beat, BeatLayout, BeatMatrix, DetectorConfig,
    RestoreMode,
};
use crate::dae::{self, AutoEncoderSpec};
use crate::error::StageExt;
use crate::evaluation;
use crate::ma::{self, MaReductionSpec};
use crate::math;
use crate::neural::{gradient_check, NetworkModel, TrainingReport};
use crate::pca::{self, apply_weights, initial_weight_matrix};
use crate::pso::{self, SwarmConfig};
use crate::quality::{self, BeatLabel, ClassifierConfig, CrossValidationReport, ReferenceTemplate};
use crate::{Error, PpgRecord, Result};

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Deployment settings stored with the profile.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProcessingSettings {
    pub retention: f64,
    pub decision_threshold: f64,
    pub weight_lower_bound: f64,
    pub weight_upper_bound: f64,
    pub restore_mode: RestoreMode,
    /// Apply predicted weights only to beats labelled noisy.
    pub weight_noisy_only: bool,
    /// Optional extra condition for a clean label: correlation with the
    /// global template at least this value.
    #[cfg_attr(feature = "serde", serde(default))]
    pub clean_min_template_corr: Option<f64>,
    pub detector: DetectorConfig,
}

impl Default for ProcessingSettings {
    fn default() -> Self {
        Self {
            retention: pca::DEFAULT_RETENTION,
            decision_threshold: quality::DEFAULT_DECISION_THRESHOLD,
            weight_lower_bound: 0.2,
            weight_upper_bound: 5.0,
            restore_mode: RestoreMode::PhaseAligned,
            weight_noisy_only: false,
            clean_min_template_corr: None,
            detector: DetectorConfig::default(),
        }
    }
}

impl ProcessingSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.retention > 0.0 && self.retention <= 1.0) {
            return Err(Error::Parameter(format!("retention {} outside (0, 1]", self.retention)));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::Parameter("decision threshold must lie in (0, 1)".into()));
        }
        if !(self.weight_lower_bound < self.weight_upper_bound) {
            return Err(Error::Parameter("weight bounds must satisfy lower < upper".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubjectProfile {
    pub format_version: u32,
    pub subject_id: String,
    pub sample_rate_hz: f64,
    pub layout: BeatLayout,
    pub global_template: Vec<f64>,
    pub classifier: NetworkModel,
    pub dae: NetworkModel,
    pub ma_model: NetworkModel,
    pub calibration_timestamp: String,
    pub recalibration_threshold: f64,
    pub settings: ProcessingSettings,
}

impl SubjectProfile {
    pub fn normalized_beat_length(&self) -> usize {
        self.layout.n()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != PROFILE_FORMAT_VERSION {
            return Err(Error::Parameter(format!(
                "profile format version {} is not supported (expected {PROFILE_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let n = self.layout.n();
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Parameter("profile sample rate must be positive".into()));
        }
        if self.global_template.len() != n {
            return Err(Error::shape("global template", n, self.global_template.len()));
        }
        if !self.global_template.iter().all(|x| x.is_finite()) {
            return Err(Error::Numeric("global template is not finite".into()));
        }
        for m in [&self.classifier, &self.dae, &self.ma_model] {
            m.validate()?;
        }
        if self.classifier.input_width() != n || self.classifier.output_width() != 1 {
            return Err(Error::shape("classifier input", n, self.classifier.input_width()));
        }
        if self.dae.input_width() != n || self.dae.output_width() != n {
            return Err(Error::shape("auto-encoder width", n, self.dae.input_width()));
        }
        let dw = self.dae.layer_widths();
        if dw.len() <= dae::CODE_LAYER || dw[dae::CODE_LAYER] != dae::CODE_WIDTH {
            return Err(Error::Parameter("auto-encoder lacks the 12-wide code layer".into()));
        }
        if self.ma_model.input_width() != dae::CODE_WIDTH || self.ma_model.output_width() != n {
            return Err(Error::shape("weight model output", n, self.ma_model.output_width()));
        }
        if !(self.recalibration_threshold > 0.0 && self.recalibration_threshold < 1.0) {
            return Err(Error::Parameter("recalibration threshold must lie in (0, 1)".into()));
        }
        self.settings.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatReport {
    pub onset: usize,
    pub end: usize,
    pub label: BeatLabel,
    /// Whether predicted weights were applied to this beat.
    pub weighted: bool,
    /// Template correlation of the normalized input beat.
    pub initial_correlation: Option<f64>,
    /// Template correlation of the rectified beat.
    pub final_correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub beats_total: usize,
    pub beats_clean: usize,
    pub used_global_template: bool,
    pub retained_pc_count: usize,
    pub retained_energy: f64,
    /// Correlation of the current template with the global template.
    pub template_correlation: Option<f64>,
    pub recalibration_needed: bool,
    pub beats: Vec<BeatReport>,
    /// Teacher-versus-network weight RMSE; only known during calibration.
    pub rmse_weights_pso_vs_ann: Option<f64>,
}

impl PipelineReport {
    pub fn mean_initial_correlation(&self) -> Option<f64> {
        mean_some(self.beats.iter().map(|b| b.initial_correlation))
    }

    pub fn mean_final_correlation(&self) -> Option<f64> {
        mean_some(self.beats.iter().map(|b| b.final_correlation))
    }
}

fn mean_some(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = it.flatten().collect();
    (!v.is_empty()).then(|| math::mean(&v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecord {
    pub cleaned: PpgRecord,
    pub report: PipelineReport,
    pub template: ReferenceTemplate,
    /// Normalized input beats.
    pub beat_matrix: BeatMatrix,
    /// Deployed weight vectors, one per beat (all ones where unweighted).
    pub weights: Vec<Vec<f64>>,
    /// Rectified normalized beats.
    pub rectified: Vec<Vec<f64>>,
}

/// Runs the deployment path on `record` with the profile's settings.
pub fn preprocess_record(record: &PpgRecord, profile: &SubjectProfile) -> Result<ProcessedRecord> {
    profile.validate().stage("profile")?;
    let s = &profile.settings;
    let raw = record.samples();
    let beats = detect_beats_with(record, &s.detector).stage("detection")?;
    let matrix = normalize_to_layout(&beats, profile.layout).stage("normalization")?;

    let mut labels = Vec::with_capacity(matrix.p());
    for col in matrix.columns() {
        let mut l = quality::classify_beat(&profile.classifier, col, s.decision_threshold).stage("classification")?;
        if let Some(min_corr) = s.clean_min_template_corr {
            if !l.noisy && math::pearson(col, &profile.global_template).map_or(true, |c| c < min_corr) {
                l.noisy = true;
            }
        }
        labels.push(l);
    }
    let (template, used_global) = match quality::form_reference_template(matrix.columns(), &labels) {
        Ok(t) => (t, false),
        Err(Error::NoCleanBeats) => (
            ReferenceTemplate {
                t: profile.global_template.clone(),
                source_beat_count: 0,
            },
            true,
        ),
        Err(e) => return Err(e).stage("template"),
    };
    let recal = if used_global {
        None
    } else {
        quality::needs_recalibration(&template, &profile.global_template, profile.recalibration_threshold).ok()
    };

    let decomposition = pca::decompose(matrix.columns()).stage("pca")?;
    let recon = decomposition.reconstruct(s.retention).stage("pca")?;

    let mut weights = Vec::with_capacity(matrix.p());
    let mut rectified = Vec::with_capacity(matrix.p());
    let mut beat_reports = Vec::with_capacity(matrix.p());
    for (k, b_r) in recon.columns.iter().enumerate() {
        let apply = !s.weight_noisy_only || labels[k].noisy;
        let w = if apply {
            let code = dae::encode(&profile.dae, b_r).stage("encoding")?;
            ma::predict_weights(&profile.ma_model, &code, s.weight_lower_bound, s.weight_upper_bound)
                .stage("weight prediction")?
        } else {
            vec![1.0; b_r.len()]
        };
        let out = if apply { apply_weights(b_r, &w).stage("weighting")? } else { b_r.clone() };
        let info = matrix.hr_info()[k];
        beat_reports.push(BeatReport {
            onset: info.onset,
            end: info.onset + info.original_length,
            label: labels[k],
            weighted: apply,
            initial_correlation: math::pearson(matrix.column(k), &template.t).ok(),
            final_correlation: math::pearson(&out, &template.t).ok(),
        });
        weights.push(w);
        rectified.push(out);
    }

    let mut restored_info = matrix.hr_info().to_vec();
    for (info, col) in restored_info.iter_mut().zip(&rectified) {
        let (offset, scale) = beats::fit_amplitude(col, info, profile.layout, raw);
        info.offset = offset;
        info.scale = scale;
    }
    let restored = restore_heart_rate(&rectified, &restored_info, profile.layout, s.restore_mode).stage("restoration")?;
    let mut cleaned = raw.to_vec();
    cleaned[restored.start..restored.end()].copy_from_slice(&restored.samples);
    let cleaned = record.with_samples(cleaned).stage("restoration")?;

    let beats_clean = labels.iter().filter(|l| !l.noisy).count();
    let report = PipelineReport {
        beats_total: matrix.p(),
        beats_clean,
        used_global_template: used_global,
        retained_pc_count: recon.retained,
        retained_energy: recon.retained_energy,
        template_correlation: recal.map(|r| r.correlation),
        recalibration_needed: recal.is_some_and(|r| r.needed),
        beats: beat_reports,
        rmse_weights_pso_vs_ann: None,
    };
    Ok(ProcessedRecord {
        cleaned,
        report,
        template,
        beat_matrix: matrix,
        weights,
        rectified,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub detector: DetectorConfig,
    pub classifier: ClassifierConfig,
    pub swarm: SwarmConfig,
    /// Input width is replaced by the calibrated beat length.
    pub dae: AutoEncoderSpec,
    /// Output width and bounds are replaced from the calibrated layout and swarm.
    pub ma: MaReductionSpec,
    pub settings: ProcessingSettings,
    pub recalibration_threshold: f64,
    /// Per-class cap on beats used for training.
    pub max_beats_per_class: usize,
    /// Refuse to calibrate with fewer beats per class.
    pub min_beats_per_class: usize,
    /// Delineate the noisy record with the clean record's onsets; both
    /// records must then have equal length.
    pub reuse_clean_onsets: bool,
    pub gradient_tolerance: f64,
}

impl CalibrationConfig {
    pub fn new(seed: u64) -> Self {
        let mut c = Self {
            detector: DetectorConfig::default(),
            classifier: ClassifierConfig::default(),
            swarm: SwarmConfig::default(),
            dae: AutoEncoderSpec::new(0),
            ma: MaReductionSpec::new(0),
            settings: ProcessingSettings::default(),
            recalibration_threshold: quality::DEFAULT_RECAL_THRESHOLD,
            max_beats_per_class: 120,
            min_beats_per_class: 120,
            reuse_clean_onsets: true,
            gradient_tolerance: 1e-5,
        };
        c.set_seed(seed);
        c
    }

    /// Derives every component seed from one value.
    pub fn set_seed(&mut self, seed: u64) {
        self.classifier.training.seed = seed;
        self.swarm.seed = seed.wrapping_add(0x1000);
        self.dae.training.seed = seed.wrapping_add(0x2000);
        self.ma.training.seed = seed.wrapping_add(0x3000);
    }
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self::new(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherBeat {
    pub initial_fitness: Option<f64>,
    pub final_fitness: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub clean_beats_detected: usize,
    pub noisy_beats_detected: usize,
    pub clean_beats_used: usize,
    pub noisy_beats_used: usize,
    pub cross_validation: CrossValidationReport,
    pub retained_pc_count: usize,
    pub teacher: Vec<TeacherBeat>,
    pub teacher_weights: Vec<Vec<f64>>,
    pub predicted_weights: Vec<Vec<f64>>,
    pub rmse_weights_pso_vs_ann: f64,
    pub dae_training: TrainingReport,
    pub ma_training: TrainingReport,
    pub classifier_gradient_check: f64,
    pub dae_gradient_check: f64,
    pub ma_gradient_check: f64,
    /// Deployment run on the noisy training record with the new profile.
    pub replay: PipelineReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub profile: SubjectProfile,
    pub report: CalibrationReport,
}

/// Delineates `samples` at the onsets and ends of reference beats; the
/// systolic peak is re-located in each segment.
pub fn beats_at_onsets(samples: &[f64], template: &[Beat]) -> Vec<Beat> {
    template
        .iter()
        .filter_map(|t| {
            let seg = &samples[t.onset..t.end];
            let peak = t.onset + math::argmax(seg)?;
            (peak > t.onset && peak + 1 < t.end).then(|| Beat {
                onset: t.onset,
                systolic_peak: peak,
                end: t.end,
                samples: seg.to_vec(),
            })
        })
        .collect()
}

/// Up to `cap` items picked at evenly spaced positions.
fn spread_select<T: Clone>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    (0..cap).map(|i| items[i * items.len() / cap].clone()).collect()
}

/// Builds a subject profile from a clean record and a corrupted training
/// record of the same subject. The corrupted record is treated as noisy
/// throughout.
pub fn calibrate_subject(
    clean: &PpgRecord,
    noisy: &PpgRecord,
    config: &CalibrationConfig,
    calibration_timestamp: &str,
) -> Result<Calibration> {
    config.settings.validate()?;
    if clean.sample_rate_hz() != noisy.sample_rate_hz() {
        return Err(Error::Calibration("clean and noisy records differ in sample rate".into()));
    }
    let clean_beats = detect_beats_with(clean, &config.detector).stage("clean detection")?;
    let noisy_beats = if config.reuse_clean_onsets {
        if clean.len() != noisy.len() {
            return Err(Error::Calibration(format!(
                "shared onsets need equal record lengths ({} vs {})",
                clean.len(),
                noisy.len()
            )));
        }
        beats_at_onsets(noisy.samples(), &clean_beats)
    } else {
        detect_beats_with(noisy, &config.detector).stage("noisy detection")?
    };
    let min = config.min_beats_per_class.max(2);
    if clean_beats.len() < min || noisy_beats.len() < min {
        return Err(Error::Calibration(format!(
            "need at least {min} beats per class, found {} clean and {} noisy",
            clean_beats.len(),
            noisy_beats.len()
        )));
    }
    let layout = BeatLayout::from_beats(&clean_beats).stage("layout")?;
    let n = layout.n();
    let all_clean = normalize_to_layout(&clean_beats, layout).stage("normalization")?;
    let clean_sel = spread_select(all_clean.columns(), config.max_beats_per_class);
    let noisy_matrix = normalize_to_layout(&spread_select(&noisy_beats, config.max_beats_per_class), layout)
        .stage("normalization")?;
    let noisy_sel = noisy_matrix.columns().to_vec();

    let trained = quality::train_classifier(&clean_sel, &noisy_sel, &config.classifier).stage("classifier")?;
    let clean_refs: Vec<&Vec<f64>> = all_clean.columns().iter().collect();
    let global = quality::mean_template(&clean_refs).stage("global template")?;

    let training: Vec<Vec<f64>> = clean_sel.iter().chain(&noisy_sel).cloned().collect();
    let mut labels = Vec::with_capacity(training.len());
    for c in &training {
        labels.push(quality::classify_beat(&trained.model, c, config.settings.decision_threshold).stage("classifier")?);
    }
    let template = match quality::form_reference_template(&training, &labels) {
        Ok(t) => t,
        Err(Error::NoCleanBeats) => global.clone(),
        Err(e) => return Err(e).stage("template"),
    };
    let decomposition = pca::decompose(&training).stage("pca")?;
    let recon = decomposition.reconstruct(config.settings.retention).stage("pca")?;
    let w0 = initial_weight_matrix(&recon.columns, &training).stage("pca")?;

    let swarm = SwarmConfig {
        lower_bound: config.settings.weight_lower_bound,
        upper_bound: config.settings.weight_upper_bound,
        ..config.swarm.clone()
    };
    let teacher = pso::optimize_weight_matrix(&recon.columns, &template.t, Some(&w0), &swarm).stage("swarm")?;
    let teacher_beats: Vec<TeacherBeat> = recon
        .columns
        .iter()
        .zip(&teacher.results)
        .map(|(b, r)| TeacherBeat {
            initial_fitness: pso::fitness(b, &vec![1.0; n], &template.t).ok(),
            final_fitness: r.as_ref().ok().map(|r| r.fitness),
            iterations: r.as_ref().map_or(0, |r| r.iterations_used),
            converged: r.as_ref().is_ok_and(|r| r.converged),
            trace: r.as_ref().map(|r| r.trace.clone()).unwrap_or_default(),
        })
        .collect();

    let dae_spec = AutoEncoderSpec {
        input_width: n,
        ..config.dae.clone()
    };
    let (dae_model, dae_training) = dae::train_autoencoder(&recon.columns, &dae_spec).stage("auto-encoder")?;
    let mut codes = Vec::with_capacity(recon.columns.len());
    for b in &recon.columns {
        codes.push(dae::encode(&dae_model, b).stage("auto-encoder")?);
    }
    let ma_spec = MaReductionSpec {
        output_width: n,
        lower_bound: swarm.lower_bound,
        upper_bound: swarm.upper_bound,
        ..config.ma.clone()
    };
    let (ma_model, ma_training) = ma::train_ma_model(&codes, &teacher.weights, &ma_spec).stage("weight model")?;
    let mut predicted = Vec::with_capacity(codes.len());
    for c in &codes {
        predicted.push(ma::predict_weights(&ma_model, c, swarm.lower_bound, swarm.upper_bound).stage("weight model")?);
    }
    let rmse_w = evaluation::rmse(
        &teacher.weights.iter().flatten().copied().collect::<Vec<_>>(),
        &predicted.iter().flatten().copied().collect::<Vec<_>>(),
    )?;

    // backprop is verified on freshly initialized networks of the deployed
    // shapes; trained sigmoid nets have gradients below finite-difference noise
    let probe = &recon.columns[0];
    let fresh = |m: &NetworkModel, seed: u64| -> Result<NetworkModel> {
        let acts = m.activations();
        NetworkModel::new(m.layer_widths(), acts[0], acts[acts.len() - 1], seed)
    };
    let classifier_gc = gradient_check(&fresh(&trained.model, config.swarm.seed)?, &training[0], &[0.0])?;
    let dae_gc = gradient_check(&fresh(&dae_model, config.swarm.seed)?, probe, probe)?;
    let ma_gc = gradient_check(&fresh(&ma_model, config.swarm.seed)?, &codes[0], &teacher.weights[0])?;
    for (name, d) in [("classifier", classifier_gc), ("auto-encoder", dae_gc), ("weight model", ma_gc)] {
        if !(d < config.gradient_tolerance) {
            return Err(Error::Calibration(format!(
                "{name} failed the gradient check ({d:.3e} >= {:.1e})",
                config.gradient_tolerance
            )));
        }
    }

    let profile = SubjectProfile {
        format_version: PROFILE_FORMAT_VERSION,
        subject_id: String::from(clean.subject_id()),
        sample_rate_hz: clean.sample_rate_hz(),
        layout,
        global_template: global.t,
        classifier: trained.model,
        dae: dae_model,
        ma_model,
        calibration_timestamp: String::from(calibration_timestamp),
        recalibration_threshold: config.recalibration_threshold,
        settings: ProcessingSettings {
            detector: config.detector.clone(),
            ..config.settings.clone()
        },
    };
    let mut replay = preprocess_record(noisy, &profile).stage("replay")?.report;
    replay.rmse_weights_pso_vs_ann = Some(rmse_w);
    let report = CalibrationReport {
        clean_beats_detected: clean_beats.len(),
        noisy_beats_detected: noisy_beats.len(),
        clean_beats_used: clean_sel.len(),
        noisy_beats_used: noisy_sel.len(),
        cross_validation: trained.report,
        retained_pc_count: recon.retained,
        teacher: teacher_beats,
        teacher_weights: teacher.weights,
        predicted_weights: predicted,
        rmse_weights_pso_vs_ann: rmse_w,
        dae_training,
        ma_training,
        classifier_gradient_check: classifier_gc,
        dae_gradient_check: dae_gc,
        ma_gradient_check: ma_gc,
        replay,
    };
    Ok(Calibration { profile, report })
}
