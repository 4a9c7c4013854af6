use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A uniformly sampled PPG recording.
///
/// Immutable after construction; constructors enforce the invariants
/// (`sample_rate_hz > 0`, non-empty samples, motion channel of equal length).
#[derive(Debug, Clone, PartialEq)]
pub struct PpgRecord {
    subject_id: String,
    sample_rate_hz: f64,
    samples: Vec<f64>,
    motion: Option<Vec<f64>>,
    quantization_bits: Option<u32>,
}

impl PpgRecord {
    /// Nominal acquisition rate of the original protocol.
    pub const NOMINAL_RATE_HZ: f64 = 60.0;

    pub fn new(subject_id: impl Into<String>, sample_rate_hz: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::Parameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Parameter("record has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parameter(format!("sample {i} is not finite")));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            sample_rate_hz,
            samples,
            motion: None,
            quantization_bits: None,
        })
    }

    pub fn with_motion(mut self, motion: Vec<f64>) -> Result<Self> {
        if motion.len() != self.samples.len() {
            return Err(Error::shape("motion channel", self.samples.len(), motion.len()));
        }
        self.motion = Some(motion);
        Ok(self)
    }

    pub fn with_quantization_bits(mut self, bits: u32) -> Self {
        self.quantization_bits = Some(bits);
        self
    }

    /// Same metadata, new samples. Drops the motion channel when the length changes.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.subject_id.clone(), self.sample_rate_hz, samples)?;
        out.quantization_bits = self.quantization_bits;
        if let Some(m) = &self.motion {
            if m.len() == out.samples.len() {
                out.motion = Some(m.clone());
            }
        }
        Ok(out)
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn motion(&self) -> Option<&[f64]> {
        self.motion.as_deref()
    }

    pub fn quantization_bits(&self) -> Option<u32> {
        self.quantization_bits
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}
