//! Figures of merit: classification counts, ROC, RMSE, SNR improvement,
//! feature acceptability and windowed heart-rate errors.

use alloc::format;
use alloc::vec::Vec;

use crate::beats::{measure_ab_ratio, measure_crest_time};
use crate::math;
use crate::{Error, PpgRecord, Result};

/// Confusion counts with the noisy class as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassificationCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ClassificationCounts {
    pub fn from_predictions(predicted_noisy: &[bool], actual_noisy: &[bool]) -> Result<Self> {
        if predicted_noisy.len() != actual_noisy.len() {
            return Err(Error::shape("classification labels", actual_noisy.len(), predicted_noisy.len()));
        }
        let mut c = Self::default();
        for (&p, &a) in predicted_noisy.iter().zip(actual_noisy) {
            match (p, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Result<f64> {
        ratio_pct(self.tp + self.tn, self.total(), "accuracy")
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }
}

fn ratio_pct(num: usize, den: usize, what: &str) -> Result<f64> {
    if den == 0 {
        return Err(Error::UndefinedMetric(format!("{what} has a zero denominator")));
    }
    Ok(num as f64 / den as f64 * 100.0)
}

/// `TP / (TP + FN)` in percent.
pub fn sensitivity(c: &ClassificationCounts) -> Result<f64> {
    ratio_pct(c.tp, c.tp + c.fn_, "sensitivity")
}

/// `TP / (TP + FP)` in percent.
pub fn positive_predictivity(c: &ClassificationCounts) -> Result<f64> {
    ratio_pct(c.tp, c.tp + c.fp, "positive predictivity")
}

pub fn sensitivity_pp(c: &ClassificationCounts) -> Result<(f64, f64)> {
    Ok((sensitivity(c)?, positive_predictivity(c)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub auc: f64,
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
}

/// Trapezoidal ROC area over all score thresholds; tied scores move along
/// the diagonal, which averages them. Positive label = `true`.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::shape("ROC labels", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Parameter("ROC scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0u128, 0u128);
    // twice the area, in units of 1/(pos*neg)
    let mut area2 = 0u128;
    let mut points = alloc::vec![(0.0, 0.0)];
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - fp0) * (tp + tp0);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        auc: area2 as f64 / (2 * pos * neg) as f64,
        points,
    })
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("rmse", x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::UndefinedMetric("rmse of empty sequences".into()));
    }
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(math::sqrt(s / x.len() as f64))
}

/// Upper limit reported when the residual noise power is zero.
pub const SNR_CAP_DB: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrImprovement {
    pub db: f64,
    /// Set when the raw value exceeded [`SNR_CAP_DB`] or was infinite.
    pub capped: bool,
}

/// `10 log10(Σ(x − x_noisy)² / Σ(x − x̃)²)`: input noise power over residual.
pub fn snr_improvement(clean: &[f64], noisy: &[f64], reconstructed: &[f64]) -> Result<SnrImprovement> {
    if clean.len() != noisy.len() {
        return Err(Error::shape("snr noisy", clean.len(), noisy.len()));
    }
    if clean.len() != reconstructed.len() {
        return Err(Error::shape("snr reconstructed", clean.len(), reconstructed.len()));
    }
    let input: f64 = clean.iter().zip(noisy).map(|(a, b)| (a - b) * (a - b)).sum();
    let residual: f64 = clean.iter().zip(reconstructed).map(|(a, b)| (a - b) * (a - b)).sum();
    if input == 0.0 {
        return Err(Error::UndefinedMetric("no input noise".into()));
    }
    if residual == 0.0 {
        return Ok(SnrImprovement {
            db: SNR_CAP_DB,
            capped: true,
        });
    }
    let db = 10.0 * math::log10(input / residual);
    Ok(if db > SNR_CAP_DB {
        SnrImprovement {
            db: SNR_CAP_DB,
            capped: true,
        }
    } else {
        SnrImprovement { db, capped: false }
    })
}

/// `(N_p − N_n) / N_p · 100`.
pub fn acceptability_improvement(n_processed: usize, n_noisy: usize) -> Result<f64> {
    if n_processed == 0 {
        return Err(Error::UndefinedMetric("no acceptable processed beats".into()));
    }
    if n_noisy > n_processed {
        return Err(Error::Parameter(format!(
            "noisy count {n_noisy} exceeds processed count {n_processed}"
        )));
    }
    Ok((n_processed - n_noisy) as f64 / n_processed as f64 * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    CrestTime,
    AbRatio,
}

pub const DEFAULT_ACCEPT_TOLERANCE: f64 = 0.25;

fn feature_value(beat: &[f64], feature: Feature, sample_rate_hz: f64) -> Option<f64> {
    match feature {
        Feature::CrestTime => measure_crest_time(beat, sample_rate_hz),
        Feature::AbRatio => measure_ab_ratio(beat),
    }
}

/// Beats whose feature is measurable and within `tolerance` (relative) of
/// the template's value.
pub fn count_acceptable_beats(
    beats: &[Vec<f64>],
    feature: Feature,
    template: &[f64],
    sample_rate_hz: f64,
    tolerance: f64,
) -> Result<usize> {
    let reference = feature_value(template, feature, sample_rate_hz)
        .ok_or_else(|| Error::UndefinedMetric(format!("{feature:?} is not measurable on the template")))?;
    Ok(beats
        .iter()
        .filter_map(|b| feature_value(b, feature, sample_rate_hz))
        .filter(|v| libm::fabs(v - reference) <= tolerance * libm::fabs(reference))
        .count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrConfig {
    pub window_s: f64,
    pub shift_s: f64,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Zero-padded transform length as a multiple of the window length.
    pub pad_factor: usize,
}

impl Default for HrConfig {
    fn default() -> Self {
        Self {
            window_s: 8.0,
            shift_s: 2.0,
            low_hz: 0.5,
            high_hz: 3.5,
            pad_factor: 8,
        }
    }
}

impl HrConfig {
    fn validate(&self) -> Result<()> {
        if !(self.shift_s > 0.0) || !(self.window_s > 0.0) {
            return Err(Error::Parameter("window and shift must be positive".into()));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::Parameter("heart-rate band must satisfy 0 < low < high".into()));
        }
        // the slowest admissible rhythm must fit two beats in a window
        if self.window_s * self.low_hz < 2.0 {
            return Err(Error::Parameter(format!(
                "window of {} s is shorter than two beats at {} Hz",
                self.window_s, self.low_hz
            )));
        }
        if self.pad_factor == 0 {
            return Err(Error::Parameter("pad factor must be at least 1".into()));
        }
        Ok(())
    }

    fn window_spans(&self, len: usize, fs: f64) -> Result<Vec<(usize, usize)>> {
        self.validate()?;
        let w = math::round_half_up(self.window_s * fs) as usize;
        let shift = (math::round_half_up(self.shift_s * fs) as usize).max(1);
        if w < 2 || len < w {
            return Err(Error::Parameter(format!(
                "record of {len} samples is shorter than one {} s window",
                self.window_s
            )));
        }
        Ok((0..=(len - w) / shift).map(|k| (k * shift, k * shift + w)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrSeries {
    pub bpm: Vec<f64>,
    pub window_s: f64,
    pub shift_s: f64,
}

/// Dominant in-band frequency of each window via a zero-padded periodogram.
pub fn estimate_hr_windows(record: &PpgRecord, cfg: &HrConfig) -> Result<HrSeries> {
    let fs = record.sample_rate_hz();
    let x = record.samples();
    let spans = cfg.window_spans(x.len(), fs)?;
    let mut bpm = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        let w = &x[s..e];
        let m = math::mean(w);
        let seg: Vec<f64> = w.iter().map(|v| v - m).collect();
        let nfft = seg.len() * cfg.pad_factor;
        let df = fs / nfft as f64;
        let k0 = libm::ceil(cfg.low_hz / df) as usize;
        let k1 = libm::floor(cfg.high_hz / df) as usize;
        let mut best = (0usize, 0.0f64);
        for k in k0..=k1 {
            let p = goertzel_power(&seg, k as f64 / nfft as f64);
            if p > best.1 {
                best = (k, p);
            }
        }
        let total = math::sum_sq(&seg);
        if !(best.1 > 1e-20 * total.max(f64::MIN_POSITIVE)) || total == 0.0 {
            return Err(Error::UndefinedMetric(format!(
                "no in-band spectral peak in window starting at sample {s}"
            )));
        }
        bpm.push(best.0 as f64 * df * 60.0);
    }
    Ok(HrSeries {
        bpm,
        window_s: cfg.window_s,
        shift_s: cfg.shift_s,
    })
}

/// `|Σ x_t e^{-2πi f t}|²` for normalized frequency `f` (cycles per sample).
fn goertzel_power(x: &[f64], f: f64) -> f64 {
    let w = 2.0 * core::f64::consts::PI * f;
    let coeff = 2.0 * libm::cos(w);
    let (mut s1, mut s2) = (0.0, 0.0);
    for &v in x {
        let s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    s1 * s1 + s2 * s2 - coeff * s1 * s2
}

/// Reference heart rate per window from known beat onsets: the mean of
/// `60 / interval` over the intervals overlapping the window, weighted by
/// overlap.
pub fn hr_from_onsets(onsets: &[usize], sample_rate_hz: f64, len: usize, cfg: &HrConfig) -> Result<HrSeries> {
    if onsets.len() < 2 || onsets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("need at least two increasing onsets".into()));
    }
    let spans = cfg.window_spans(len, sample_rate_hz)?;
    let mut bpm = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        let (mut acc, mut weight) = (0.0, 0.0);
        for w in onsets.windows(2) {
            let overlap = e.min(w[1]).saturating_sub(s.max(w[0]));
            if overlap > 0 {
                let interval = (w[1] - w[0]) as f64 / sample_rate_hz;
                acc += overlap as f64 * 60.0 / interval;
                weight += overlap as f64;
            }
        }
        if weight == 0.0 {
            return Err(Error::UndefinedMetric(format!("no beats inside window starting at sample {s}")));
        }
        bpm.push(acc / weight);
    }
    Ok(HrSeries {
        bpm,
        window_s: cfg.window_s,
        shift_s: cfg.shift_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrErrors {
    /// Mean absolute error in BPM.
    pub error1: f64,
    /// Mean relative error in percent.
    pub error2_pct: f64,
    /// `None` when either series is constant and they differ.
    pub cc: Option<f64>,
}

pub fn hr_errors(est: &HrSeries, truth: &HrSeries) -> Result<HrErrors> {
    let (e, t) = (&est.bpm, &truth.bpm);
    if e.len() != t.len() {
        return Err(Error::shape("HR windows", t.len(), e.len()));
    }
    if e.is_empty() {
        return Err(Error::UndefinedMetric("no HR windows".into()));
    }
    if t.contains(&0.0) {
        return Err(Error::UndefinedMetric("zero reference heart rate".into()));
    }
    let n = e.len() as f64;
    let error1 = e.iter().zip(t).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / n;
    let error2 = e.iter().zip(t).map(|(a, b)| libm::fabs(a - b) / b).sum::<f64>() / n;
    // identical series agree perfectly even when constant
    let cc = if e == t { Some(1.0) } else { math::pearson(e, t).ok() };
    Ok(HrErrors {
        error1,
        error2_pct: error2 * 100.0,
        cc,
    })
}
