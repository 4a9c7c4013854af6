use alloc::format;
use alloc::vec::Vec;

use super::Beat;
use crate::math;
use crate::{Error, PpgRecord, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    /// Minimum spacing between onsets; 0.3 s caps the rate at 200 BPM.
    pub refractory_s: f64,
    pub min_record_s: f64,
    /// Records whose peak-to-peak range is below this are treated as flat.
    pub min_dynamic_range: f64,
    /// An upstroke is a beat candidate if its rise exceeds this fraction of
    /// the running reference rise.
    pub threshold_frac: f64,
    /// Upstrokes interrupted by a dip smaller than this fraction of the rise
    /// are merged.
    pub merge_frac: f64,
    /// Half-width of the moving average used for detection only.
    pub smoothing_half: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            refractory_s: 0.3,
            min_record_s: 2.0,
            min_dynamic_range: 1e-6,
            threshold_frac: 0.4,
            merge_frac: 0.15,
            smoothing_half: 1,
        }
    }
}

pub fn detect_beats(record: &PpgRecord) -> Result<Vec<Beat>> {
    detect_beats_with(record, &DetectorConfig::default())
}

#[derive(Debug, Clone, Copy)]
struct Upstroke {
    foot: usize,
    top: usize,
    rise: f64,
}

/// Detects beats foot-to-foot.
///
/// Upstrokes come from a running comparison of consecutive samples on a
/// lightly smoothed copy of the signal; small interruptions are merged and
/// accepted against an adaptive rise threshold with a refractory period. The
/// foot of each accepted upstroke is anchored on the peak of the second
/// difference (acceleration PPG) and refined to the raw local minimum.
pub fn detect_beats_with(record: &PpgRecord, cfg: &DetectorConfig) -> Result<Vec<Beat>> {
    let x = record.samples();
    let fs = record.sample_rate_hz();
    if (x.len() as f64) < cfg.min_record_s * fs {
        return Err(Error::Detection(format!(
            "record of {} samples is shorter than {} s",
            x.len(),
            cfg.min_record_s
        )));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < cfg.min_dynamic_range * math::mean(x).abs().max(1.0) {
        return Err(Error::Detection("signal is flat".into()));
    }
    let s = math::moving_average(x, cfg.smoothing_half);
    let strokes = merge_upstrokes(find_upstrokes(&s), &s, cfg.merge_frac);
    if strokes.is_empty() {
        return Err(Error::Detection("no upstrokes found".into()));
    }

    // reference rise from the strongest half of the early upstrokes
    let early_limit = (3.0 * fs) as usize;
    let mut early: Vec<f64> = strokes
        .iter()
        .enumerate()
        .filter(|(i, u)| u.foot < early_limit || *i < 6)
        .map(|(_, u)| u.rise)
        .collect();
    early.sort_by(|a, b| b.total_cmp(a));
    let top = &early[..early.len().div_ceil(2)];
    let mut reference = math::median(top).unwrap_or(0.0);

    let refractory = libm::ceil(cfg.refractory_s * fs) as usize;
    let mut accepted: Vec<Upstroke> = Vec::new();
    for u in strokes {
        if u.rise < cfg.threshold_frac * reference {
            continue;
        }
        match accepted.last_mut() {
            Some(last) if u.foot < last.foot + refractory => {
                if u.rise > last.rise {
                    *last = u;
                }
            }
            _ => accepted.push(u),
        }
        reference = 0.75 * reference + 0.25 * u.rise;
    }

    let mut onsets: Vec<usize> = accepted.iter().map(|u| refine_foot(x, &s, u)).collect();
    onsets.dedup();
    onsets.retain(|&o| o > 0);
    let mut beats = Vec::new();
    for w in onsets.windows(2) {
        let (onset, end) = (w[0], w[1]);
        if end <= onset + 2 {
            continue;
        }
        let peak = onset + math::argmax(&x[onset..end]).unwrap_or(0);
        if peak <= onset || peak + 1 > end {
            continue;
        }
        beats.push(Beat {
            onset,
            systolic_peak: peak,
            end,
            samples: x[onset..end].to_vec(),
        });
    }
    if beats.is_empty() {
        return Err(Error::Detection("no complete beats detected".into()));
    }
    Ok(beats)
}

fn find_upstrokes(s: &[f64]) -> Vec<Upstroke> {
    let mut out = Vec::new();
    let mut foot: Option<usize> = None;
    let mut rising = false;
    let mut dir_known = false;
    for i in 0..s.len().saturating_sub(1) {
        let d = s[i + 1] - s[i];
        if d == 0.0 {
            continue;
        }
        let up = d > 0.0;
        if !dir_known {
            dir_known = true;
            rising = up;
            // a record that starts on an upstroke has no visible foot
            continue;
        }
        if up && !rising {
            foot = Some(i);
        } else if !up && rising {
            if let Some(f) = foot.take() {
                out.push(Upstroke {
                    foot: f,
                    top: i,
                    rise: s[i] - s[f],
                });
            }
        }
        rising = up;
    }
    out
}

fn merge_upstrokes(strokes: Vec<Upstroke>, s: &[f64], merge_frac: f64) -> Vec<Upstroke> {
    let mut out: Vec<Upstroke> = Vec::with_capacity(strokes.len());
    for u in strokes {
        if let Some(c) = out.last_mut() {
            let dip = s[c.top] - s[u.foot];
            let scale = c.rise.max(u.rise);
            if s[u.top] > s[c.top] && dip < merge_frac * scale && s[u.foot] >= s[c.foot] {
                c.top = u.top;
                c.rise = s[c.top] - s[c.foot];
                continue;
            }
        }
        out.push(u);
    }
    out
}

fn refine_foot(x: &[f64], s: &[f64], u: &Upstroke) -> usize {
    // peak of the second difference in the lower half of the upstroke
    let mid = (u.foot + u.top).div_ceil(2).max(u.foot + 1);
    let lo = u.foot.max(1);
    let hi = mid.min(s.len() - 2);
    let mut anchor = u.foot;
    let mut best = f64::NEG_INFINITY;
    for i in lo..=hi.max(lo) {
        if i + 1 >= s.len() {
            break;
        }
        let apg = s[i + 1] - 2.0 * s[i] + s[i - 1];
        if apg > best {
            best = apg;
            anchor = i;
        }
    }
    // the raw minimum may sit anywhere on a flat foot, back to the turning point
    let a = anchor.min(u.foot).saturating_sub(2);
    let b = (anchor + 2).min(u.top).min(x.len() - 1);
    a + math::argmin(&x[a..=b.max(a)]).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{generate_clean_ppg, MorphologyParams};
    use alloc::vec;

    #[test]
    fn onsets_match_generator_truth() {
        let s = generate_clean_ppg(&MorphologyParams::default().with_heart_rate(60.0), 10.0, 60.0, 1)
            .unwrap();
        let beats = detect_beats(&s.record).unwrap();
        assert!((9..=11).contains(&beats.len()), "{}", beats.len());
        for b in &beats {
            let nearest = s
                .onsets
                .iter()
                .map(|&o| (o as i64 - b.onset as i64).abs())
                .min()
                .unwrap();
            assert!(nearest <= 2, "onset {} off by {nearest}", b.onset);
        }
    }

    #[test]
    fn zero_jitter_intervals_are_equal() {
        let s = generate_clean_ppg(&MorphologyParams::default().with_heart_rate(72.0), 30.0, 60.0, 1)
            .unwrap();
        let beats = detect_beats(&s.record).unwrap();
        let iv: Vec<i64> = beats.windows(2).map(|w| (w[1].onset - w[0].onset) as i64).collect();
        let (mn, mx) = (iv.iter().min().unwrap(), iv.iter().max().unwrap());
        assert!(mx - mn <= 1, "{iv:?}");
    }

    #[test]
    fn one_twenty_bpm_interval() {
        let s = generate_clean_ppg(&MorphologyParams::default().with_heart_rate(120.0), 10.0, 60.0, 1)
            .unwrap();
        let beats = detect_beats(&s.record).unwrap();
        assert!((18..=21).contains(&beats.len()), "{}", beats.len());
        let iv: Vec<f64> = beats.windows(2).map(|w| (w[1].onset - w[0].onset) as f64).collect();
        let m = math::mean(&iv);
        assert!((m - 30.0).abs() <= 1.0, "{m}");
    }

    #[test]
    fn constant_signal_fails() {
        let r = PpgRecord::new("s", 60.0, vec![0.7; 600]).unwrap();
        assert!(matches!(detect_beats(&r), Err(Error::Detection(_))));
    }

    #[test]
    fn short_record_fails() {
        let r = PpgRecord::new("s", 60.0, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(detect_beats(&r), Err(Error::Detection(_))));
    }

    #[test]
    fn beat_lengths_cover_span() {
        let s = generate_clean_ppg(&MorphologyParams::default().with_jitter(0.1), 30.0, 60.0, 4).unwrap();
        let beats = detect_beats(&s.record).unwrap();
        let total: usize = beats.iter().map(|b| b.len()).sum();
        assert_eq!(total, beats.last().unwrap().end - beats[0].onset);
        for b in &beats {
            assert!(b.onset < b.systolic_peak && b.systolic_peak < b.end);
            assert_eq!(b.anacrotic_len() + b.catacrotic_len(), b.len());
        }
    }
}
