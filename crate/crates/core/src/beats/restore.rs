use alloc::vec;
use alloc::vec::Vec;

use super::spline::{resample_cubic, CubicSpline};
use super::{BeatInfo, BeatLayout};
use crate::{Error, Result};

/// How normalized beats are mapped back onto the original time line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RestoreMode {
    /// Every retained row goes back to its original sample position relative
    /// to the systolic peak; padded rows are dropped and samples lost to
    /// truncation are generated by cubic-spline interpolation across the
    /// junction.
    #[default]
    PhaseAligned,
    /// Each column is stretched from `n` to its original length by cubic
    /// spline resampling, and junctions get a 3-sample linear blend.
    UniformResample,
}

/// A contiguous signal piece starting at sample `start` of the source record.
#[derive(Debug, Clone, PartialEq)]
pub struct RestoredSignal {
    pub start: usize,
    pub samples: Vec<f64>,
}

impl RestoredSignal {
    pub fn end(&self) -> usize {
        self.start + self.samples.len()
    }
}

/// Undoes heart-rate normalization: processed columns (in `[0, 1]` units) are
/// returned to their original lengths, amplitudes and onsets.
pub fn restore_heart_rate(
    processed: &[Vec<f64>],
    hr_info: &[BeatInfo],
    layout: BeatLayout,
    mode: RestoreMode,
) -> Result<RestoredSignal> {
    if processed.len() != hr_info.len() {
        return Err(Error::shape("restore hr_info", processed.len(), hr_info.len()));
    }
    if processed.is_empty() {
        return Err(Error::Parameter("nothing to restore".into()));
    }
    if let Some(c) = processed.iter().find(|c| c.len() != layout.n()) {
        return Err(Error::shape("restore column", layout.n(), c.len()));
    }
    if let Some(i) = hr_info
        .iter()
        .position(|h| h.anacrotic_len + h.catacrotic_len != h.original_length || h.original_length == 0)
    {
        return Err(Error::Parameter(alloc::format!("inconsistent hr_info for beat {i}")));
    }
    let start = hr_info.iter().map(|h| h.onset).min().unwrap_or(0);
    let end = hr_info
        .iter()
        .map(|h| h.onset + h.original_length)
        .max()
        .unwrap_or(start);
    let span = end - start;
    let mut sum = vec![0.0; span];
    let mut count = vec![0u32; span];

    match mode {
        RestoreMode::PhaseAligned => {
            let peak = layout.peak_row() as isize;
            for (col, h) in processed.iter().zip(hr_info) {
                for (r, &y) in col.iter().enumerate() {
                    let d = r as isize - peak;
                    if d >= -(h.anacrotic_len as isize) && d < h.catacrotic_len as isize {
                        let pos = (h.onset + h.anacrotic_len) as isize + d - start as isize;
                        sum[pos as usize] += h.offset + h.scale * y;
                        count[pos as usize] += 1;
                    }
                }
            }
        }
        RestoreMode::UniformResample => {
            let mut pieces: Vec<(usize, Vec<f64>)> = Vec::with_capacity(processed.len());
            for (col, h) in processed.iter().zip(hr_info) {
                let stretched = resample_cubic(col, h.original_length)?;
                let piece = stretched.iter().map(|y| h.offset + h.scale * y).collect();
                pieces.push((h.onset - start, piece));
            }
            blend_junctions(&mut pieces);
            for (at, piece) in pieces {
                for (i, v) in piece.into_iter().enumerate() {
                    sum[at + i] += v;
                    count[at + i] += 1;
                }
            }
        }
    }

    let known: Vec<Option<f64>> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(RestoredSignal {
        start,
        samples: fill_gaps(&known)?,
    })
}

/// Linear 3-sample blend of each piece's tail toward the next piece's head.
fn blend_junctions(pieces: &mut [(usize, Vec<f64>)]) {
    const OVERLAP: usize = 3;
    for k in 0..pieces.len().saturating_sub(1) {
        let (at, len) = (pieces[k].0, pieces[k].1.len());
        if pieces[k + 1].0 != at + len || len < OVERLAP + 1 {
            continue;
        }
        let head = pieces[k + 1].1[0];
        let tail = &mut pieces[k].1;
        // extrapolated value the tail would take at the junction
        let projected = 2.0 * tail[len - 1] - tail[len - 2];
        let jump = head - projected;
        for i in 0..OVERLAP {
            tail[len - OVERLAP + i] += jump * (i + 1) as f64 / (OVERLAP + 1) as f64;
        }
    }
}

/// Fills runs of missing samples with a cubic spline through up to three
/// known neighbours on each side.
fn fill_gaps(known: &[Option<f64>]) -> Result<Vec<f64>> {
    const CONTEXT: usize = 3;
    let mut out: Vec<f64> = known.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut i = 0;
    while i < known.len() {
        if known[i].is_some() {
            i += 1;
            continue;
        }
        let g0 = i;
        while i < known.len() && known[i].is_none() {
            i += 1;
        }
        let g1 = i;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut j = g0;
        while j > 0 && xs.len() < CONTEXT {
            j -= 1;
            match known[j] {
                Some(v) => {
                    xs.push(j as f64);
                    ys.push(v);
                }
                None => break,
            }
        }
        xs.reverse();
        ys.reverse();
        let left = xs.len();
        for (j, v) in known.iter().enumerate().skip(g1).take(CONTEXT) {
            match v {
                Some(v) => {
                    xs.push(j as f64);
                    ys.push(*v);
                }
                None => break,
            }
        }
        let right = xs.len() - left;
        if xs.is_empty() {
            return Err(Error::Parameter("no restored samples to interpolate from".into()));
        }
        if left == 0 || right == 0 {
            // one-sided: hold the nearest known value
            let v = if left == 0 { ys[0] } else { ys[ys.len() - 1] };
            out[g0..g1].iter_mut().for_each(|x| *x = v);
            continue;
        }
        let spline = CubicSpline::new(&xs, &ys)?;
        for (k, x) in out.iter_mut().enumerate().take(g1).skip(g0) {
            *x = spline.eval(k as f64);
        }
    }
    Ok(out)
}
