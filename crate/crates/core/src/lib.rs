//! Continuous-learning pipeline for roadside vehicle detection.
//!
//! * [`dataset`]: annotated frames, manifests, sampling and synthetic corpora.
//! * [`haar`]: Haar-like feature index, integral images and extraction.
//! * [`boost`]: regression stumps and the boosting loop with parallel
//!   per-dimension candidate fitting.
//! * [`mining`]: positive/negative mining of a representative training set.
//! * [`presence`]: presence-mode signals, confusion matrices, accuracy
//!   distributions and ROC curves.
//! * [`harness`]: deterministic, fault-tolerant evaluation worker pool with
//!   order-independent aggregation and archived reports.

pub mod boost;
pub mod dataset;
pub mod haar;
pub mod harness;
pub mod mining;
pub mod par;
pub mod presence;
