//! Synthetic PPG with known morphology, and motion-noise mixing at controlled SNR.
//!
//! Each beat is the sum of a systolic and a diastolic Gaussian pulse laid out
//! on its own period, with the straight line through the end values removed so
//! the beat starts and ends exactly on the baseline. Beat feet are therefore
//! true local minima and every morphology feature is known by construction.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{self, exp, log10, powf, sqrt};
use crate::{Error, PpgRecord, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MorphologyParams {
    pub heart_rate_bpm: f64,
    pub systolic_amp: f64,
    pub diastolic_amp: f64,
    /// Pulse centers as fractions of the beat period.
    pub systolic_center_frac: f64,
    pub diastolic_center_frac: f64,
    /// Gaussian standard deviations as fractions of the beat period.
    pub systolic_width_frac: f64,
    pub diastolic_width_frac: f64,
    /// Uniform per-beat period jitter, `T_k = T (1 + jitter * u)`, `u in [-1, 1]`.
    pub hr_jitter_frac: f64,
    /// Amplitude of a slow sinusoidal heart-rate swing, in BPM.
    pub hr_swing_bpm: f64,
    pub hr_swing_period_s: f64,
    pub baseline: f64,
}

impl Default for MorphologyParams {
    fn default() -> Self {
        Self {
            heart_rate_bpm: 75.0,
            systolic_amp: 1.0,
            diastolic_amp: 0.5,
            systolic_center_frac: 0.25,
            diastolic_center_frac: 0.55,
            systolic_width_frac: 0.07,
            diastolic_width_frac: 0.10,
            hr_jitter_frac: 0.0,
            hr_swing_bpm: 0.0,
            hr_swing_period_s: 60.0,
            baseline: 0.0,
        }
    }
}

impl MorphologyParams {
    pub fn with_heart_rate(mut self, bpm: f64) -> Self {
        self.heart_rate_bpm = bpm;
        self
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.hr_jitter_frac = jitter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = self;
        let bad = |msg: &str| Err(Error::Parameter(msg.into()));
        if !(40.0..=200.0).contains(&p.heart_rate_bpm) {
            return bad("heart rate must lie in [40, 200] BPM");
        }
        if !(p.systolic_amp > 0.0) {
            return bad("systolic amplitude must be positive");
        }
        if !(p.diastolic_amp > 0.0 && p.diastolic_amp < p.systolic_amp) {
            return bad("diastolic amplitude must be positive and below the systolic amplitude");
        }
        let (cs, cd) = (p.systolic_center_frac, p.diastolic_center_frac);
        if !(0.0 < cs && cs < cd && cd < 1.0) {
            return bad("pulse centers must satisfy 0 < systolic < diastolic < 1");
        }
        if !(p.systolic_width_frac > 0.0 && p.diastolic_width_frac > 0.0) {
            return bad("pulse widths must be positive");
        }
        if cd - cs < 2.0 * p.systolic_width_frac.max(p.diastolic_width_frac) {
            return bad("pulses overlap too much to give distinct systolic and diastolic peaks");
        }
        if !(0.0..0.2).contains(&p.hr_jitter_frac) {
            return bad("heart-rate jitter must lie in [0, 0.2)");
        }
        if p.hr_swing_bpm < 0.0
            || p.heart_rate_bpm - p.hr_swing_bpm < 40.0
            || p.heart_rate_bpm + p.hr_swing_bpm > 200.0
        {
            return bad("heart-rate swing must keep the rate inside [40, 200] BPM");
        }
        if !(p.hr_swing_period_s > 0.0) {
            return bad("heart-rate swing period must be positive");
        }
        if !p.baseline.is_finite() {
            return bad("baseline must be finite");
        }
        Ok(())
    }

    fn raw_shape(&self, phase: f64) -> f64 {
        let g = |c: f64, w: f64| {
            let z = (phase - c) / w;
            exp(-0.5 * z * z)
        };
        self.systolic_amp * g(self.systolic_center_frac, self.systolic_width_frac)
            + self.diastolic_amp * g(self.diastolic_center_frac, self.diastolic_width_frac)
    }

    /// Beat waveform above baseline at `phase` in `[0, 1]`; zero at both ends.
    pub fn beat_shape(&self, phase: f64) -> f64 {
        let f0 = self.raw_shape(0.0);
        let f1 = self.raw_shape(1.0);
        self.raw_shape(phase) - ((1.0 - phase) * f0 + phase * f1)
    }

    /// Systolic over diastolic height, evaluated at the pulse centers.
    pub fn analytic_ab_ratio(&self) -> f64 {
        self.beat_shape(self.systolic_center_frac) / self.beat_shape(self.diastolic_center_frac)
    }
}

/// Ground truth for one generated beat.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatTruth {
    pub onset: usize,
    pub systolic_peak: usize,
    /// Exclusive end, equal to the next onset.
    pub end: usize,
    pub crest_time_s: f64,
    pub ab_ratio: f64,
    pub heart_rate_bpm: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticPpg {
    pub record: PpgRecord,
    /// Every beat foot inside the record, in order.
    pub onsets: Vec<usize>,
    /// Complete beats only (both feet inside the record).
    pub beats: Vec<BeatTruth>,
}

/// Generates `floor(duration_s * fs)` samples of clean two-pulse PPG.
pub fn generate_clean_ppg(
    params: &MorphologyParams,
    duration_s: f64,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<SyntheticPpg> {
    params.validate()?;
    if !(duration_s > 0.0 && sample_rate_hz > 0.0) {
        return Err(Error::Parameter("duration and sample rate must be positive".into()));
    }
    let len = libm::floor(duration_s * sample_rate_hz) as usize;
    if len == 0 {
        return Err(Error::Parameter("record would contain no samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // beat boundary times; the record starts half-way through a beat
    let nominal = 60.0 / params.heart_rate_bpm;
    let mut bounds = Vec::new();
    let mut rates = Vec::new();
    let mut t = -0.5 * nominal;
    bounds.push(t);
    while t <= duration_s + nominal {
        let swing = if params.hr_swing_bpm > 0.0 {
            params.hr_swing_bpm * libm::sin(2.0 * PI * t.max(0.0) / params.hr_swing_period_s)
        } else {
            0.0
        };
        let hr = params.heart_rate_bpm + swing;
        let u: f64 = if params.hr_jitter_frac > 0.0 {
            rng.gen_range(-1.0..=1.0)
        } else {
            0.0
        };
        let period = 60.0 / hr * (1.0 + params.hr_jitter_frac * u);
        rates.push(60.0 / period);
        t += period;
        bounds.push(t);
    }

    let mut samples = Vec::with_capacity(len);
    let mut k = 0;
    for i in 0..len {
        let ti = i as f64 / sample_rate_hz;
        while bounds[k + 1] <= ti {
            k += 1;
        }
        let phase = (ti - bounds[k]) / (bounds[k + 1] - bounds[k]);
        samples.push(params.baseline + params.beat_shape(phase));
    }

    let mut onsets = Vec::new();
    let mut onset_rates = Vec::new();
    for (b, &tb) in bounds.iter().enumerate() {
        if tb <= 0.0 {
            continue;
        }
        let centre = libm::round(tb * sample_rate_hz) as i64;
        let lo = (centre - 2).max(1) as usize;
        let hi = ((centre + 2) as usize).min(len.saturating_sub(2));
        if lo > hi {
            continue;
        }
        let idx = lo + math::argmin(&samples[lo..=hi]).unwrap_or(0);
        onsets.push(idx);
        onset_rates.push(rates.get(b).copied().unwrap_or(params.heart_rate_bpm));
    }

    let ab_ratio = params.analytic_ab_ratio();
    let beats = onsets
        .windows(2)
        .zip(&onset_rates)
        .map(|(w, &hr)| {
            let (onset, end) = (w[0], w[1]);
            let peak = onset + math::argmax(&samples[onset..end]).unwrap_or(0);
            BeatTruth {
                onset,
                systolic_peak: peak,
                end,
                crest_time_s: (peak - onset) as f64 / sample_rate_hz,
                ab_ratio,
                heart_rate_bpm: hr,
            }
        })
        .collect();

    let record = PpgRecord::new("synthetic", sample_rate_hz, samples)?;
    Ok(SyntheticPpg {
        record,
        onsets,
        beats,
    })
}

/// Sample-by-sample addition of a motion record onto a clean record.
///
/// The motion samples are carried along as the output's motion channel.
pub fn mix_motion(clean: &PpgRecord, motion: &PpgRecord) -> Result<PpgRecord> {
    if clean.len() != motion.len() {
        return Err(Error::shape("mix_motion", clean.len(), motion.len()));
    }
    let mixed = clean
        .samples()
        .iter()
        .zip(motion.samples())
        .map(|(c, m)| c + m)
        .collect();
    clean.with_samples(mixed)?.with_motion(motion.samples().to_vec())
}

/// Unit-RMS noise made of sinusoids with log-uniform frequencies in
/// `[low_hz, high_hz]` and random phases.
pub fn band_limited_noise(
    len: usize,
    sample_rate_hz: f64,
    low_hz: f64,
    high_hz: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(0.0 < low_hz && low_hz < high_hz && high_hz < 0.5 * sample_rate_hz) {
        return Err(Error::Parameter(format!(
            "noise band [{low_hz}, {high_hz}] Hz is invalid for {sample_rate_hz} Hz sampling"
        )));
    }
    const TONES: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio = high_hz / low_hz;
    let tones: Vec<(f64, f64)> = (0..TONES)
        .map(|_| {
            let f = low_hz * powf(ratio, rng.gen::<f64>());
            let phase = 2.0 * PI * rng.gen::<f64>();
            (f, phase)
        })
        .collect();
    let mut out: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate_hz;
            tones
                .iter()
                .map(|&(f, ph)| libm::sin(2.0 * PI * f * t + ph))
                .sum()
        })
        .collect();
    let rms = sqrt(math::sum_sq(&out) / len.max(1) as f64);
    if rms > 0.0 {
        out.iter_mut().for_each(|x| *x /= rms);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSegment {
    pub start: usize,
    pub len: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    /// A recorded motion channel, at least as long as the record.
    Recorded(Vec<f64>),
    /// Pseudo-random band-limited process (0.1-5 Hz by default).
    BandLimited { seed: u64, low_hz: f64, high_hz: f64 },
}

impl NoiseSource {
    pub fn default_band(seed: u64) -> Self {
        NoiseSource::BandLimited {
            seed,
            low_hz: 0.1,
            high_hz: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub segments: Vec<NoiseSegment>,
    pub source: NoiseSource,
}

impl NoiseSpec {
    pub fn validate(&self, record_len: usize) -> Result<()> {
        let mut sorted: Vec<NoiseSegment> = self.segments.clone();
        sorted.sort_by_key(|s| s.start);
        let mut prev_end = 0;
        for s in &sorted {
            if s.len == 0 {
                return Err(Error::Parameter("noise segment has zero length".into()));
            }
            if s.start + s.len > record_len {
                return Err(Error::Parameter(format!(
                    "noise segment {}+{} exceeds record length {record_len}",
                    s.start, s.len
                )));
            }
            if s.start < prev_end {
                return Err(Error::Parameter("noise segments overlap".into()));
            }
            if !s.snr_db.is_finite() {
                return Err(Error::Parameter("segment SNR must be finite".into()));
            }
            prev_end = s.start + s.len;
        }
        Ok(())
    }
}

/// Adds noise scaled per segment so that `10 log10(sum clean^2 / sum noise^2)`
/// equals the segment's target SNR. Samples outside all segments are untouched.
///
/// Returns the noisy record and the injected noise, sample-aligned.
pub fn mix_noise_at_level(clean: &PpgRecord, spec: &NoiseSpec) -> Result<(PpgRecord, Vec<f64>)> {
    let len = clean.len();
    spec.validate(len)?;
    let source = match &spec.source {
        NoiseSource::Recorded(v) => {
            if v.len() < len {
                return Err(Error::shape("recorded noise source", len, v.len()));
            }
            v[..len].to_vec()
        }
        NoiseSource::BandLimited {
            seed,
            low_hz,
            high_hz,
        } => band_limited_noise(len, clean.sample_rate_hz(), *low_hz, *high_hz, *seed)?,
    };
    let mut injected = alloc::vec![0.0; len];
    for s in &spec.segments {
        let range = s.start..s.start + s.len;
        let signal_energy = math::sum_sq(&clean.samples()[range.clone()]);
        let noise_energy = math::sum_sq(&source[range.clone()]);
        if signal_energy <= 0.0 {
            return Err(Error::Parameter(format!(
                "segment at {} has zero clean energy; target SNR unattainable",
                s.start
            )));
        }
        if noise_energy <= 0.0 {
            return Err(Error::Parameter(format!(
                "noise source is silent over segment at {}",
                s.start
            )));
        }
        let gain = sqrt(signal_energy / (noise_energy * powf(10.0, s.snr_db / 10.0)));
        for i in range {
            injected[i] = gain * source[i];
        }
    }
    let noisy = clean
        .samples()
        .iter()
        .zip(&injected)
        .map(|(c, n)| c + n)
        .collect();
    let record = clean.with_samples(noisy)?.with_motion(injected.clone())?;
    Ok((record, injected))
}

/// Realized segment SNR in dB.
pub fn segment_snr_db(clean: &[f64], noise: &[f64]) -> f64 {
    10.0 * log10(math::sum_sq(clean) / math::sum_sq(noise))
}
