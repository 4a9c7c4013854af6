use crate::math;

fn unique_interior_max(beat: &[f64]) -> Option<usize> {
    let peak = math::argmax(beat)?;
    if peak == 0 || peak + 1 >= beat.len() {
        return None;
    }
    let top = beat[peak];
    if beat.iter().filter(|&&x| x == top).count() > 1 {
        return None;
    }
    Some(peak)
}

/// Onset-to-systolic-peak duration in seconds, sample 0 being the onset.
///
/// `None` when the maximum is not unique or sits on either end of the beat.
pub fn measure_crest_time(beat: &[f64], sample_rate_hz: f64) -> Option<f64> {
    let peak = unique_interior_max(beat)?;
    Some(peak as f64 / sample_rate_hz)
}

/// Systolic to diastolic peak height ratio, heights taken from the beat minimum.
///
/// The diastolic peak is the largest local maximum after the systolic peak,
/// located on a 3-point smoothed copy of the falling limb and refined on the
/// raw samples. `None` when no such maximum exists.
pub fn measure_ab_ratio(beat: &[f64]) -> Option<f64> {
    let peak = unique_interior_max(beat)?;
    let len = beat.len();
    let sm = math::moving_average(beat, 1);
    // skip past the smoothed systolic crest
    let mut i = peak + 1;
    while i < len && sm[i] >= sm[i - 1] {
        i += 1;
    }
    let mut best: Option<usize> = None;
    for j in i.max(peak + 2)..len - 1 {
        if sm[j] > sm[j - 1] && sm[j] >= sm[j + 1] && best.is_none_or(|b| sm[j] > sm[b]) {
            best = Some(j);
        }
    }
    let j = best?;
    let lo = (j - 1).max(peak + 1);
    let hi = (j + 1).min(len - 1);
    let dia = lo + math::argmax(&beat[lo..=hi])?;
    let base = beat.iter().copied().fold(f64::INFINITY, f64::min);
    let a = beat[peak] - base;
    let b = beat[dia] - base;
    (b > 0.0 && dia + 1 < len).then(|| a / b)
}
