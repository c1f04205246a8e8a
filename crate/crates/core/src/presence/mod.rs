//! Detector-output evaluation: NEMA TS-2 style mode signals, frame-level
//! confusion counts, accuracy distributions and ROC curves.

mod metrics;
mod modes;
mod plot;
mod roc;

use thiserror::Error;

pub use metrics::{accuracy_percentiles, confusion, overall_accuracy, ConfusionMatrix, Percentiles};
pub use modes::{
    ms_to_frames, to_mode_signal, DetectorMode, ModeEvent, ModeParams, ModeSignal, PresenceStream,
    PULSE_MS_RANGE,
};
pub use plot::{cdf_svg, roc_svg};
pub use roc::{roc_curve, roc_table, RocPoint};

#[derive(Debug, Error, PartialEq)]
pub enum PresenceError {
    #[error("invalid presence stream: {0}")]
    InvalidStream(String),
    #[error("pulse duration {0} ms outside [100, 150]")]
    PulseOutOfRange(f64),
    #[error("invalid mode parameter: {0}")]
    InvalidParam(String),
    #[error("streams differ: {0}")]
    StreamMismatch(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("no accuracies given")]
    EmptyInput,
    #[error("ROC needs both classes (positives {positives}, negatives {negatives})")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
}
