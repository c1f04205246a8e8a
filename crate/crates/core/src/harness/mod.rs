//! In-process evaluation harness: one task per localization annotation,
//! dispatched to a bounded worker pool with injected faults and retries,
//! merged by an order-independent aggregate and archived as run reports.

mod aggregate;
mod query;
mod report;
mod run;
mod task;

use std::path::PathBuf;

use thiserror::Error;

pub use aggregate::{aggregate, AggregateStats, TagKey};
pub use query::{Clause, Query};
pub use report::{input_digest, render_report, Archive, ArchiveEntry, RunReport, INDEX_FILE};
pub use run::{
    run, ClassifierEvaluator, Evaluation, Evaluator, FaultPlan, RunOptions, TaskResult, TaskStatus,
};
pub use task::{create_tasks, task_id, EvalTask};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("malformed query {query:?}: {message}")]
    Query { query: String, message: String },
    #[error("invalid harness configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate result for task {0}")]
    DuplicateTask(String),
    #[error("run {0} is already archived")]
    DuplicateRun(String),
    #[error("circuit breaker open: {failed} of {total} tasks failed")]
    CircuitOpen { failed: usize, total: usize },
    #[error("archive {path}: {message}")]
    Archive { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
