//! Beat detection and delineation, heart-rate normalization into the beat
//! matrix, heart-rate restoration, and clinical feature measurement.

mod detect;
mod features;
mod restore;
pub mod spline;

use alloc::format;
use alloc::vec::Vec;

pub use detect::{detect_beats, detect_beats_with, DetectorConfig};
pub use features::{measure_ab_ratio, measure_crest_time};
pub use restore::{restore_heart_rate, RestoreMode, RestoredSignal};

use crate::math::{self, round_half_up};
use crate::{Error, Result};

/// One delineated beat: foot to next foot.
#[derive(Debug, Clone, PartialEq)]
pub struct Beat {
    pub onset: usize,
    pub systolic_peak: usize,
    /// Exclusive.
    pub end: usize,
    pub samples: Vec<f64>,
}

impl Beat {
    /// Onset up to (excluding) the systolic peak.
    pub fn anacrotic_len(&self) -> usize {
        self.systolic_peak - self.onset
    }

    /// Systolic peak up to the end.
    pub fn catacrotic_len(&self) -> usize {
        self.end - self.systolic_peak
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Phase lengths every normalized beat is brought to. The systolic peak sits
/// at row `anacrotic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeatLayout {
    pub anacrotic: usize,
    pub catacrotic: usize,
}

impl BeatLayout {
    pub fn n(&self) -> usize {
        self.anacrotic + self.catacrotic
    }

    pub fn peak_row(&self) -> usize {
        self.anacrotic
    }

    /// Average phase lengths over `beats`, rounded to nearest (ties up).
    pub fn from_beats(beats: &[Beat]) -> Result<Self> {
        if beats.len() < 2 {
            return Err(Error::Normalization(format!(
                "need at least 2 beats, got {}",
                beats.len()
            )));
        }
        let p = beats.len() as f64;
        let ana = beats.iter().map(|b| b.anacrotic_len() as f64).sum::<f64>() / p;
        let cat = beats.iter().map(|b| b.catacrotic_len() as f64).sum::<f64>() / p;
        let layout = Self {
            anacrotic: round_half_up(ana) as usize,
            catacrotic: round_half_up(cat) as usize,
        };
        if layout.anacrotic == 0 || layout.catacrotic < 2 {
            return Err(Error::Normalization("degenerate average beat phases".into()));
        }
        Ok(layout)
    }
}

/// Per-beat bookkeeping needed to undo heart-rate normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatInfo {
    pub onset: usize,
    pub original_length: usize,
    pub anacrotic_len: usize,
    pub catacrotic_len: usize,
    /// Amplitude map back to signal units: `x = offset + scale * y`.
    pub offset: f64,
    pub scale: f64,
}

/// The `n x p` matrix of heart-rate normalized beats, one beat per column.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatMatrix {
    layout: BeatLayout,
    columns: Vec<Vec<f64>>,
    hr_info: Vec<BeatInfo>,
}

impl BeatMatrix {
    /// Assembles a matrix from parts, checking shapes only.
    pub fn from_parts(
        layout: BeatLayout,
        columns: Vec<Vec<f64>>,
        hr_info: Vec<BeatInfo>,
    ) -> Result<Self> {
        if columns.len() != hr_info.len() {
            return Err(Error::shape("beat matrix hr_info", columns.len(), hr_info.len()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != layout.n()) {
            return Err(Error::shape("beat matrix column", layout.n(), c.len()));
        }
        Ok(Self {
            layout,
            columns,
            hr_info,
        })
    }

    /// Same bookkeeping with new column contents.
    pub fn with_columns(&self, columns: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_parts(self.layout, columns, self.hr_info.clone())
    }

    pub fn layout(&self) -> BeatLayout {
        self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn peak_row(&self) -> usize {
        self.layout.peak_row()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn hr_info(&self) -> &[BeatInfo] {
        &self.hr_info
    }

    /// Element `B[j, k]`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }
}

/// Normalizes beats to their own average phase lengths.
pub fn normalize_beats(beats: &[Beat]) -> Result<BeatMatrix> {
    let layout = BeatLayout::from_beats(beats)?;
    normalize_to_layout(beats, layout)
}

/// Truncates or pads each beat at its ends so that the anacrotic and
/// catacrotic phases match `layout`, keeping the systolic peak on
/// `layout.peak_row()`. Padding repeats the boundary sample. Columns are
/// min-max scaled to `[0, 1]`.
pub fn normalize_to_layout(beats: &[Beat], layout: BeatLayout) -> Result<BeatMatrix> {
    if beats.len() < 2 {
        return Err(Error::Normalization(format!(
            "need at least 2 beats, got {}",
            beats.len()
        )));
    }
    let mut columns = Vec::with_capacity(beats.len());
    let mut info = Vec::with_capacity(beats.len());
    for (k, b) in beats.iter().enumerate() {
        let ana = b.anacrotic_len();
        let cat = b.catacrotic_len();
        if !(b.onset < b.systolic_peak && b.systolic_peak < b.end) || ana + cat != b.len() {
            return Err(Error::Normalization(format!("beat {k} is not delineated consistently")));
        }
        let mut col = Vec::with_capacity(layout.n());
        if ana >= layout.anacrotic {
            col.extend_from_slice(&b.samples[ana - layout.anacrotic..ana]);
        } else {
            col.extend(core::iter::repeat_n(b.samples[0], layout.anacrotic - ana));
            col.extend_from_slice(&b.samples[..ana]);
        }
        if cat >= layout.catacrotic {
            col.extend_from_slice(&b.samples[ana..ana + layout.catacrotic]);
        } else {
            col.extend_from_slice(&b.samples[ana..]);
            let last = b.samples[b.len() - 1];
            col.extend(core::iter::repeat_n(last, layout.catacrotic - cat));
        }
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = hi - lo;
        if !(scale > 0.0) {
            return Err(Error::Normalization(format!("beat {k} is flat")));
        }
        col.iter_mut().for_each(|x| *x = (*x - lo) / scale);
        columns.push(col);
        info.push(BeatInfo {
            onset: b.onset,
            original_length: b.len(),
            anacrotic_len: ana,
            catacrotic_len: cat,
            offset: lo,
            scale,
        });
    }
    BeatMatrix::from_parts(layout, columns, info)
}

/// Least-squares affine map `raw ~ offset + scale * column` over the rows
/// that correspond to original samples of the beat.
pub(crate) fn fit_amplitude(column: &[f64], info: &BeatInfo, layout: BeatLayout, signal: &[f64]) -> (f64, f64) {
    let peak = layout.peak_row() as isize;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (r, &y) in column.iter().enumerate() {
        let d = r as isize - peak;
        if d >= -(info.anacrotic_len as isize) && d < info.catacrotic_len as isize {
            let pos = (info.onset + info.anacrotic_len) as isize + d;
            if let Some(&raw) = signal.get(pos as usize) {
                xs.push(y);
                ys.push(raw);
            }
        }
    }
    let mx = math::mean(&xs);
    let my = math::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if xs.len() < 2 || sxx <= 1e-12 {
        return (info.offset, info.scale);
    }
    let scale = sxy / sxx;
    (my - scale * mx, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn beat(onset: usize, ana: usize, cat: usize) -> Beat {
        // triangle-ish beat rising to the peak then falling
        let mut s = Vec::new();
        for i in 0..ana {
            s.push(i as f64 / ana as f64);
        }
        for i in 0..cat {
            s.push(1.0 - 0.9 * i as f64 / cat as f64);
        }
        Beat {
            onset,
            systolic_peak: onset + ana,
            end: onset + ana + cat,
            samples: s,
        }
    }

    #[test]
    fn equal_beats_only_get_scaled() {
        let b = beat(0, 10, 20);
        let beats = vec![b.clone(), Beat { onset: 30, systolic_peak: 40, end: 60, ..b.clone() }];
        let m = normalize_beats(&beats).unwrap();
        assert_eq!(m.n(), 30);
        let lo = b.samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = b.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (x, y) in m.column(0).iter().zip(&b.samples) {
            assert!((x - (y - lo) / (hi - lo)).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_length_forcing() {
        // lengths 58, 60, 62 with equal phase split
        let beats = vec![beat(0, 29, 29), beat(58, 30, 30), beat(118, 31, 31)];
        let m = normalize_beats(&beats).unwrap();
        assert_eq!(m.n(), 60);
        assert_eq!(m.peak_row(), 30);
        // shortest padded by one repeated sample at each end
        let c0 = m.column(0);
        assert_eq!(c0[0], c0[1]);
        assert_eq!(c0[59], c0[58]);
        for k in 0..3 {
            assert_eq!(math::argmax(m.column(k)), Some(30));
        }
        assert_eq!(m.hr_info()[2].original_length, 62);
    }

    #[test]
    fn single_beat_is_rejected() {
        assert!(matches!(normalize_beats(&[beat(0, 5, 5)]), Err(Error::Normalization(_))));
    }
}
