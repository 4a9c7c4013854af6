use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("beat detection failed: {0}")]
    Detection(String),
    #[error("beat normalization failed: {0}")]
    Normalization(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("training failed: {0}")]
    Training(String),
    /// The metric is not defined for the given input (zero denominator,
    /// constant sequence, single class, ...).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    /// No beat was labelled clean; the caller should fall back to the
    /// subject's global template.
    #[error("no clean beats available to form a reference template")]
    NoCleanBeats,
    #[error("optimization failed: {0}")]
    Optimization(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Shape {
            context,
            expected,
            actual,
        }
    }
}

/// Tags an error with the pipeline stage that produced it.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
