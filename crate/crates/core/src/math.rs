//! Small numeric helpers shared across modules.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sum_sq(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

/// Pearson correlation coefficient.
///
/// Fails with [`Error::UndefinedMetric`] when either sequence is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("pearson", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "correlation needs at least 2 samples, got {}",
            a.len()
        )));
    }
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // relative floor so that rounding noise on a constant signal is still "constant"
    let scale_a = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let scale_b = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let len = a.len() as f64;
    if saa <= 1e-24 * scale_a * scale_a * len || sbb <= 1e-24 * scale_b * scale_b * len {
        return Err(Error::UndefinedMetric(
            "correlation of a constant sequence".into(),
        ));
    }
    Ok((sab / (sqrt(saa) * sqrt(sbb))).clamp(-1.0, 1.0))
}

/// Index of the first maximum. Returns `None` on an empty slice.
pub fn argmax(xs: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the first minimum. Returns `None` on an empty slice.
pub fn argmin(xs: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if x >= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// Median of a slice (average of the two middle values for even lengths).
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    })
}

/// Centered moving average with window `2 * half + 1`, shrinking at the edges.
pub fn moving_average(xs: &[f64], half: usize) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            mean(&xs[lo..hi])
        })
        .collect()
}
