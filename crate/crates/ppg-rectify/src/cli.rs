//! Command-line surface. Data goes to files in `--out-dir`; diagnostics go
//! to the error stream.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ppg_rectify_core::beats::{detect_beats, measure_ab_ratio, measure_crest_time, normalize_to_layout, BeatLayout};
use ppg_rectify_core::evaluation::{
    estimate_hr_windows, hr_errors, hr_from_onsets, rmse, roc_auc, snr_improvement, HrConfig,
};
use ppg_rectify_core::pca::{self, initial_weight_matrix};
use ppg_rectify_core::pipeline::{beats_at_onsets, calibrate_subject, preprocess_record, CalibrationConfig};
use ppg_rectify_core::pso::{self, SwarmConfig};
use ppg_rectify_core::quality::{self, ClassifierConfig, CrossValidationReport};
use ppg_rectify_core::synthesis::{
    generate_clean_ppg, mix_noise_at_level, MorphologyParams, NoiseSegment, NoiseSource, NoiseSpec,
};
use ppg_rectify_core::{Error as CoreError, PpgRecord};

use crate::config::{ConfigFile, Overrides, RunSettings};
use crate::error::{CliError, Result};
use crate::io::{self, Table};
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "ppg-rectify", version, about = "Per-subject motion-artifact rectification of PPG records")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// PCA energy retention [default: 0.95]
    #[arg(long, global = true)]
    pub retention: Option<f64>,
    /// Template correlation below which recalibration is advised [default: 0.7]
    #[arg(long, global = true)]
    pub recal_threshold: Option<f64>,
    /// Heart-rate window length in seconds [default: 8]
    #[arg(long, global = true)]
    pub window_s: Option<f64>,
    /// Heart-rate window shift in seconds [default: 2]
    #[arg(long, global = true)]
    pub shift_s: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate clean, motion and noisy synthetic records with ground truth.
    Synth(SynthArgs),
    /// Build a subject profile from a clean and a corrupted training record.
    Calibrate(CalibrateArgs),
    /// Rectify a record with a subject profile.
    Process(ProcessArgs),
    /// Signal-quality and heart-rate metrics.
    Evaluate(EvaluateArgs),
    /// Delineate beats and measure per-beat features.
    Detect(DetectArgs),
    /// Run a single training stage on its own.
    #[command(subcommand)]
    Train(TrainCommand),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 75.0)]
    pub bpm: f64,
    #[arg(long)]
    pub duration: f64,
    #[arg(long, default_value_t = 60.0)]
    pub fs: f64,
    /// Beat-to-beat period jitter as a fraction of the period.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Corrupted segments as `start:len:snr_db`, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "snr_db")]
    pub snr_segments: Vec<SegmentArg>,
    /// Corrupt the whole record at this SNR.
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long, default_value = "synthetic")]
    pub subject: String,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub clean: PathBuf,
    /// Training record corrupted throughout, same subject.
    #[arg(long)]
    pub noisy: PathBuf,
    /// Stored in the profile; defaults to the current UTC time.
    #[arg(long)]
    pub timestamp: Option<String>,
    /// Run the detector on the noisy record instead of reusing clean onsets.
    #[arg(long)]
    pub detect_noisy: bool,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, requires_all = ["noisy", "cleaned"])]
    pub clean: Option<PathBuf>,
    #[arg(long, requires = "clean")]
    pub noisy: Option<PathBuf>,
    #[arg(long, requires = "clean")]
    pub cleaned: Option<PathBuf>,
    /// Regions scored separately, `start:len[:snr_db]`.
    #[arg(long, value_delimiter = ',')]
    pub segments: Vec<SegmentArg>,
    /// Record whose heart rate is estimated.
    #[arg(long, requires = "truth")]
    pub hr_input: Option<PathBuf>,
    /// Ground-truth table with an `onset` column.
    #[arg(long, requires = "hr_input")]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Cross-validate and fit the beat classifier.
    Classifier(PairArgs),
    /// Run the swarm teacher and emit per-beat fitness traces.
    Pso(PairArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub noisy: PathBuf,
}

/// `start:len[:snr_db]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentArg {
    pub start: usize,
    pub len: usize,
    pub snr_db: Option<f64>,
}

impl FromStr for SegmentArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("segment '{s}' is not start:len[:snr_db]");
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let len: usize = parts[1].trim().parse().map_err(|_| bad())?;
        if len == 0 {
            return Err(format!("segment '{s}' has zero length"));
        }
        let snr_db = match parts.get(2) {
            Some(p) => Some(p.trim().parse().map_err(|_| bad())?),
            None => None,
        };
        Ok(Self { start, len, snr_db })
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let file = cli.common.config.as_deref().map(ConfigFile::load).transpose()?;
    let flags = Overrides {
        seed: cli.common.seed,
        out_dir: cli.common.out_dir.clone(),
        retention: cli.common.retention,
        recal_threshold: cli.common.recal_threshold,
        window_s: cli.common.window_s,
        shift_s: cli.common.shift_s,
    };
    let settings = RunSettings::resolve(file.as_ref(), &flags)?;
    match &cli.command {
        Command::Synth(a) => synth(a, &settings),
        Command::Calibrate(a) => calibrate(a, &settings),
        Command::Process(a) => process(a, &settings),
        Command::Evaluate(a) => evaluate(a, &settings),
        Command::Detect(a) => detect(a, &settings),
        Command::Train(TrainCommand::Classifier(a)) => train_classifier(a, &settings),
        Command::Train(TrainCommand::Pso(a)) => train_pso(a, &settings),
    }
}

struct Outputs {
    manifest: RunManifest,
    dir: PathBuf,
}

impl Outputs {
    fn new(command: &str, inputs: &[&Path], s: &RunSettings) -> Self {
        Self {
            manifest: RunManifest::new(command, inputs, s.describe(), s.seed, &s.out_dir),
            dir: s.out_dir.clone(),
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.manifest.record_output(&p);
        p
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.path(name);
        t.save(&p)
    }

    fn record(&mut self, name: &str, r: &PpgRecord) -> Result<()> {
        let p = self.path(name);
        io::save_record(r, &p)
    }

    fn finish(self) -> Result<()> {
        let p = self.manifest.write()?;
        eprintln!("wrote {} outputs and {}", self.manifest.outputs.len(), p.display());
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn synth(a: &SynthArgs, s: &RunSettings) -> Result<()> {
    if !(a.duration > 0.0) {
        return Err(CliError::Usage("--duration must be positive".into()));
    }
    let params = MorphologyParams::default().with_heart_rate(a.bpm).with_jitter(a.jitter);
    let generated = generate_clean_ppg(&params, a.duration, a.fs, s.seed)?;
    let clean = PpgRecord::new(a.subject.clone(), a.fs, generated.record.samples().to_vec())?;
    let len = clean.len();
    let segments: Vec<NoiseSegment> = match a.snr_db {
        Some(db) => vec![NoiseSegment { start: 0, len, snr_db: db }],
        None => a
            .snr_segments
            .iter()
            .map(|g| {
                g.snr_db
                    .map(|db| NoiseSegment { start: g.start, len: g.len, snr_db: db })
                    .ok_or_else(|| CliError::Usage(format!("segment {}:{} needs an SNR", g.start, g.len)))
            })
            .collect::<Result<_>>()?,
    };
    // the noise stream is decorrelated from the waveform seed
    let spec = NoiseSpec {
        segments,
        source: NoiseSource::default_band(s.seed.wrapping_add(0x5EED)),
    };
    let (noisy, injected) = mix_noise_at_level(&clean, &spec)?;
    let motion = PpgRecord::new(a.subject.clone(), a.fs, injected)?;

    let mut out = Outputs::new("synth", &[], s);
    out.record("clean.csv", &clean)?;
    out.record("motion.csv", &motion)?;
    out.record("noisy.csv", &noisy)?;
    let mut truth = Table::new(&["beat", "onset", "systolic_peak", "end", "heart_rate_bpm", "crest_time_s", "ab_ratio"]);
    for (i, b) in generated.beats.iter().enumerate() {
        truth.push([
            i.to_string(),
            b.onset.to_string(),
            b.systolic_peak.to_string(),
            b.end.to_string(),
            b.heart_rate_bpm.to_string(),
            b.crest_time_s.to_string(),
            b.ab_ratio.to_string(),
        ]);
    }
    out.table("truth.csv", &truth)?;
    let mut segs = Table::new(&["start", "len", "snr_db"]);
    for g in &spec.segments {
        segs.push([g.start.to_string(), g.len.to_string(), g.snr_db.to_string()]);
    }
    out.table("segments.csv", &segs)?;
    eprintln!("synthesized {len} samples, {} complete beats", generated.beats.len());
    out.finish()
}

fn cv_tables(r: &CrossValidationReport) -> Result<(Table, Table)> {
    let mut folds = Table::new(&["fold", "tp", "fp", "tn", "fn", "se_pct", "pp_pct"]);
    for (i, f) in r.folds.iter().enumerate() {
        let c = f.counts;
        folds.push([
            i.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            fmt_opt(f.sensitivity),
            fmt_opt(f.positive_predictivity),
        ]);
    }
    folds.push([
        "mean".to_string(),
        r.pooled.tp.to_string(),
        r.pooled.fp.to_string(),
        r.pooled.tn.to_string(),
        r.pooled.fn_.to_string(),
        fmt_opt(r.mean_sensitivity),
        fmt_opt(r.mean_positive_predictivity),
    ]);
    let mut roc = Table::new(&["fpr", "tpr"]);
    for (x, y) in roc_auc(&r.scores, &r.labels)?.points {
        roc.push([x, y]);
    }
    Ok((folds, roc))
}

fn print_cv(r: &CrossValidationReport) {
    eprintln!("fold   SE%      PP%");
    for (i, f) in r.folds.iter().enumerate() {
        eprintln!("{i:<6} {:<8} {}", fmt_pct(f.sensitivity), fmt_pct(f.positive_predictivity));
    }
    eprintln!(
        "mean   {:<8} {}   AUC {:.4}",
        fmt_pct(r.mean_sensitivity),
        fmt_pct(r.mean_positive_predictivity),
        r.auc
    );
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))
}

fn calibrate(a: &CalibrateArgs, s: &RunSettings) -> Result<()> {
    let clean = io::load_record(&a.clean)?;
    let noisy = io::load_record(&a.noisy)?;
    let mut cfg = CalibrationConfig::new(s.seed);
    cfg.settings.retention = s.retention;
    cfg.recalibration_threshold = s.recal_threshold;
    cfg.reuse_clean_onsets = !a.detect_noisy;
    let stamp = a
        .timestamp
        .clone()
        .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let started = Instant::now();
    let cal = calibrate_subject(&clean, &noisy, &cfg, &stamp)?;
    let r = &cal.report;

    let mut out = Outputs::new("calibrate", &[&a.clean, &a.noisy], s);
    let p = out.path("profile.toml");
    io::save_profile(&cal.profile, &p)?;
    let (folds, roc) = cv_tables(&r.cross_validation)?;
    out.table("cv_folds.csv", &folds)?;
    out.table("roc.csv", &roc)?;
    let mut teacher = Table::new(&["beat", "initial_fitness", "final_fitness", "iterations", "converged"]);
    for (i, t) in r.teacher.iter().enumerate() {
        teacher.push([
            i.to_string(),
            fmt_opt(t.initial_fitness),
            fmt_opt(t.final_fitness),
            t.iterations.to_string(),
            t.converged.to_string(),
        ]);
    }
    out.table("teacher.csv", &teacher)?;
    let converged = r.teacher.iter().filter(|t| t.converged).count();
    let mut summary = Table::new(&["key", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("subject_id", cal.profile.subject_id.clone()),
        ("normalized_beat_length", cal.profile.layout.n().to_string()),
        ("clean_beats_detected", r.clean_beats_detected.to_string()),
        ("noisy_beats_detected", r.noisy_beats_detected.to_string()),
        ("clean_beats_used", r.clean_beats_used.to_string()),
        ("noisy_beats_used", r.noisy_beats_used.to_string()),
        ("cv_mean_se_pct", fmt_opt(r.cross_validation.mean_sensitivity)),
        ("cv_mean_pp_pct", fmt_opt(r.cross_validation.mean_positive_predictivity)),
        ("cv_auc", r.cross_validation.auc.to_string()),
        ("retained_pc_count", r.retained_pc_count.to_string()),
        ("teacher_converged", converged.to_string()),
        ("rmse_weights_pso_vs_ann", r.rmse_weights_pso_vs_ann.to_string()),
        ("dae_final_loss", fmt_opt(r.dae_training.loss_history.last().copied())),
        ("ma_final_loss", fmt_opt(r.ma_training.loss_history.last().copied())),
        ("classifier_gradient_check", r.classifier_gradient_check.to_string()),
        ("dae_gradient_check", r.dae_gradient_check.to_string()),
        ("ma_gradient_check", r.ma_gradient_check.to_string()),
        ("elapsed_s", started.elapsed().as_secs_f64().to_string()),
    ];
    for (k, v) in rows {
        summary.push([k.to_string(), v]);
    }
    out.table("calibration_summary.csv", &summary)?;
    print_cv(&r.cross_validation);
    eprintln!(
        "n = {}, teacher converged {converged}/{}, weight RMSE {:.4}",
        cal.profile.layout.n(),
        r.teacher.len(),
        r.rmse_weights_pso_vs_ann
    );
    out.finish()
}

fn process(a: &ProcessArgs, s: &RunSettings) -> Result<()> {
    let mut profile = io::load_profile(&a.profile)?;
    if s.retention_explicit {
        profile.settings.retention = s.retention;
    }
    if s.recal_explicit {
        profile.recalibration_threshold = s.recal_threshold;
    }
    let record = io::load_record(&a.input)?;
    let started = Instant::now();
    let result = preprocess_record(&record, &profile)?;
    let elapsed = started.elapsed().as_secs_f64();
    let r = &result.report;
    let per_beat_ms = if r.beats_total > 0 { elapsed * 1e3 / r.beats_total as f64 } else { 0.0 };

    let mut out = Outputs::new("process", &[&a.profile, &a.input], s);
    out.record("cleaned.csv", &result.cleaned)?;
    let mut beats = Table::new(&[
        "beat",
        "onset",
        "end",
        "noisy",
        "score",
        "weighted",
        "initial_correlation",
        "final_correlation",
    ]);
    for (i, b) in r.beats.iter().enumerate() {
        beats.push([
            i.to_string(),
            b.onset.to_string(),
            b.end.to_string(),
            b.label.noisy.to_string(),
            b.label.score.to_string(),
            b.weighted.to_string(),
            fmt_opt(b.initial_correlation),
            fmt_opt(b.final_correlation),
        ]);
    }
    out.table("beats.csv", &beats)?;
    let mut summary = Table::new(&["key", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("beats_total", r.beats_total.to_string()),
        ("beats_clean", r.beats_clean.to_string()),
        ("used_global_template", r.used_global_template.to_string()),
        ("retained_pc_count", r.retained_pc_count.to_string()),
        ("retained_energy", r.retained_energy.to_string()),
        ("template_correlation", fmt_opt(r.template_correlation)),
        ("recalibration_needed", r.recalibration_needed.to_string()),
        ("mean_initial_correlation", fmt_opt(r.mean_initial_correlation())),
        ("mean_final_correlation", fmt_opt(r.mean_final_correlation())),
        ("latency_ms_per_beat", per_beat_ms.to_string()),
    ];
    for (k, v) in rows {
        summary.push([k.to_string(), v]);
    }
    out.table("process_summary.csv", &summary)?;
    eprintln!(
        "{} beats ({} clean), {:.3} ms per beat",
        r.beats_total, r.beats_clean, per_beat_ms
    );
    if r.used_global_template {
        eprintln!("no clean beats; the global template was used");
    }
    if r.recalibration_needed {
        eprintln!(
            "recalibration recommended: template correlation {} is below {}",
            fmt_opt(r.template_correlation),
            profile.recalibration_threshold
        );
    }
    out.finish()
}

fn evaluate(a: &EvaluateArgs, s: &RunSettings) -> Result<()> {
    if a.clean.is_none() && a.hr_input.is_none() {
        return Err(CliError::Usage(
            "evaluate needs --clean/--noisy/--cleaned, --hr-input/--truth, or both".into(),
        ));
    }
    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend([&a.clean, &a.noisy, &a.cleaned, &a.hr_input, &a.truth].into_iter().flatten().map(|p| p.as_path()));
    let mut out = Outputs::new("evaluate", &inputs, s);

    if let (Some(c), Some(n), Some(x)) = (&a.clean, &a.noisy, &a.cleaned) {
        let (clean, noisy, cleaned) = (io::load_record(c)?, io::load_record(n)?, io::load_record(x)?);
        if clean.len() != noisy.len() || clean.len() != cleaned.len() {
            return Err(CliError::Usage(format!(
                "record lengths differ: clean {}, noisy {}, cleaned {}",
                clean.len(),
                noisy.len(),
                cleaned.len()
            )));
        }
        let mut regions = vec![("record".to_string(), 0, clean.len())];
        for g in &a.segments {
            if g.start + g.len > clean.len() {
                return Err(CliError::Usage(format!("segment {}:{} exceeds the record", g.start, g.len)));
            }
            let name = g.snr_db.map_or_else(|| format!("segment@{}", g.start), |db| format!("{db}dB@{}", g.start));
            regions.push((name, g.start, g.len));
        }
        let mut t = Table::new(&["region", "start", "len", "rmse_noisy", "rmse_cleaned", "snr_i_db", "snr_i_status"]);
        for (name, start, len) in regions {
            let r = start..start + len;
            let (x, y, z) = (&clean.samples()[r.clone()], &noisy.samples()[r.clone()], &cleaned.samples()[r]);
            let (db, status) = match snr_improvement(x, y, z) {
                Ok(v) => (v.db.to_string(), if v.capped { "capped" } else { "ok" }),
                Err(CoreError::UndefinedMetric(_)) => ("NA".to_string(), "undefined"),
                Err(e) => return Err(e.into()),
            };
            eprintln!("{name}: SNR_i {db} dB ({status})");
            t.push([
                name,
                start.to_string(),
                len.to_string(),
                rmse(x, y)?.to_string(),
                rmse(x, z)?.to_string(),
                db,
                status.to_string(),
            ]);
        }
        out.table("metrics.csv", &t)?;
    }

    if let (Some(h), Some(tp)) = (&a.hr_input, &a.truth) {
        let rec = io::load_record(h)?;
        let truth = Table::load(tp)?;
        let onsets: Vec<usize> = truth.parse_column("onset", tp)?;
        let cfg = HrConfig {
            window_s: s.window_s,
            shift_s: s.shift_s,
            ..HrConfig::default()
        };
        let est = estimate_hr_windows(&rec, &cfg)?;
        let reference = hr_from_onsets(&onsets, rec.sample_rate_hz(), rec.len(), &cfg)?;
        let errs = hr_errors(&est, &reference)?;
        let mut series = Table::new(&["window", "start_s", "estimated_bpm", "truth_bpm"]);
        for (i, (e, t)) in est.bpm.iter().zip(&reference.bpm).enumerate() {
            series.push([i.to_string(), (i as f64 * s.shift_s).to_string(), e.to_string(), t.to_string()]);
        }
        out.table("hr.csv", &series)?;
        let mut m = Table::new(&["error1_bpm", "error2_pct", "cc"]);
        m.push([errs.error1.to_string(), errs.error2_pct.to_string(), fmt_opt(errs.cc)]);
        out.table("hr_metrics.csv", &m)?;
        eprintln!("Error1 {:.3} BPM, Error2 {:.3} %, CC {}", errs.error1, errs.error2_pct, fmt_opt(errs.cc));
    }
    out.finish()
}

fn detect(a: &DetectArgs, s: &RunSettings) -> Result<()> {
    let record = io::load_record(&a.input)?;
    let beats = detect_beats(&record)?;
    let fs = record.sample_rate_hz();
    let mut t = Table::new(&["beat", "onset", "systolic_peak", "end", "crest_time_s", "ab_ratio"]);
    for (i, b) in beats.iter().enumerate() {
        t.push([
            i.to_string(),
            b.onset.to_string(),
            b.systolic_peak.to_string(),
            b.end.to_string(),
            fmt_opt(measure_crest_time(&b.samples, fs)),
            fmt_opt(measure_ab_ratio(&b.samples)),
        ]);
    }
    let mut out = Outputs::new("detect", &[&a.input], s);
    out.table("beats.csv", &t)?;
    eprintln!("{} beats", beats.len());
    out.finish()
}

/// Normalized clean and noisy beats on the clean layout, noisy beats cut at
/// the clean onsets.
struct BeatPair {
    clean: Vec<Vec<f64>>,
    noisy: Vec<Vec<f64>>,
}

fn paired_beats(a: &PairArgs) -> Result<BeatPair> {
    let clean = io::load_record(&a.clean)?;
    let noisy = io::load_record(&a.noisy)?;
    if clean.len() != noisy.len() {
        return Err(CliError::Usage(format!(
            "clean and noisy records differ in length ({} vs {})",
            clean.len(),
            noisy.len()
        )));
    }
    let clean_beats = detect_beats(&clean)?;
    let layout = BeatLayout::from_beats(&clean_beats)?;
    let noisy_beats = beats_at_onsets(noisy.samples(), &clean_beats);
    let c = normalize_to_layout(&clean_beats, layout)?.columns().to_vec();
    let n = normalize_to_layout(&noisy_beats, layout)?.columns().to_vec();
    Ok(BeatPair { clean: c, noisy: n })
}

fn train_classifier(a: &PairArgs, s: &RunSettings) -> Result<()> {
    let BeatPair { clean, noisy } = paired_beats(a)?;
    let mut cfg = ClassifierConfig::default();
    cfg.training.seed = s.seed;
    let trained = quality::train_classifier(&clean, &noisy, &cfg)?;
    let mut out = Outputs::new("train classifier", &[&a.clean, &a.noisy], s);
    let p = out.path("classifier.toml");
    io::save_toml(&trained.model, &p)?;
    let (folds, roc) = cv_tables(&trained.report)?;
    out.table("cv_folds.csv", &folds)?;
    out.table("roc.csv", &roc)?;
    let mut scores = Table::new(&["beat", "noisy", "score"]);
    for (i, (sc, l)) in trained.report.scores.iter().zip(&trained.report.labels).enumerate() {
        scores.push([i.to_string(), l.to_string(), sc.to_string()]);
    }
    out.table("scores.csv", &scores)?;
    print_cv(&trained.report);
    out.finish()
}

fn train_pso(a: &PairArgs, s: &RunSettings) -> Result<()> {
    let BeatPair { clean, noisy } = paired_beats(a)?;
    let refs: Vec<&Vec<f64>> = clean.iter().collect();
    let template = quality::mean_template(&refs)?;
    let recon = pca::decompose(&noisy)?.reconstruct(s.retention)?;
    let w0 = initial_weight_matrix(&recon.columns, &noisy)?;
    let cfg = SwarmConfig {
        seed: s.seed,
        ..SwarmConfig::default()
    };
    let result = pso::optimize_weight_matrix(&recon.columns, &template.t, Some(&w0), &cfg)?;
    let mut traces = Table::new(&["beat", "iteration", "best_fitness"]);
    let mut beats = Table::new(&["beat", "initial_fitness", "final_fitness", "iterations", "converged"]);
    let ones = vec![1.0; template.t.len()];
    for (k, (b, r)) in recon.columns.iter().zip(&result.results).enumerate() {
        let initial = pso::fitness(b, &ones, &template.t).ok();
        match r {
            Ok(r) => {
                for (i, f) in r.trace.iter().enumerate() {
                    traces.push([k.to_string(), i.to_string(), f.to_string()]);
                }
                beats.push([
                    k.to_string(),
                    fmt_opt(initial),
                    r.fitness.to_string(),
                    r.iterations_used.to_string(),
                    r.converged.to_string(),
                ]);
            }
            Err(e) => {
                eprintln!("beat {k}: {e}");
                beats.push([k.to_string(), fmt_opt(initial), "NA".into(), "0".into(), "false".into()]);
            }
        }
    }
    let mut out = Outputs::new("train pso", &[&a.clean, &a.noisy], s);
    out.table("pso_traces.csv", &traces)?;
    out.table("pso_beats.csv", &beats)?;
    eprintln!(
        "{}/{} beats reached the target, mean fitness {}",
        result.converged_count(),
        result.results.len(),
        fmt_opt(result.mean_fitness())
    );
    out.finish()
}
