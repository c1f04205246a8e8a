//! Annotation dataset model: frames, zones, manifest I/O, sampling and the
//! synthetic corpus used for desk-scale experiments.

mod manifest;
mod sampling;
mod synthetic;
mod types;

use std::path::PathBuf;

use thiserror::Error;

pub use manifest::{load_dataset, save_dataset, MANIFEST_FILE, ZONES_FILE};
pub use sampling::{oracle_label, partition, sparse_random_sample, SplitRatios};
pub use synthetic::{
    generate_synthetic_corpus, Archetype, Emission, SyntheticConfig, SyntheticCorpus,
};
pub use types::{
    is_simple_polygon, AnnotatedFrame, AnnotationKind, CameraFlags, ClassLabel, ConditionTags,
    Dataset, DetectionZone, ImagePatch, Precipitation, RoadCondition, TimeOfDay,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("invalid zone {zone_id}: {message}")]
    InvalidZone { zone_id: String, message: String },
    #[error("dangling zone_id {0}")]
    DanglingZone(String),
    #[error("duplicate frame_id {0}")]
    DuplicateFrame(String),
    #[error("unknown frame_id {0}")]
    UnknownFrame(String),
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty dataset")]
    Empty,
}
