use sha2::{Digest, Sha256};

use crate::dataset::{AnnotationKind, ConditionTags, Dataset};

use super::query::Query;
use super::HarnessError;

/// Unit of work: evaluate the classifier on one localization annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTask {
    pub task_id: String,
    pub frame_id: String,
    pub video_id: String,
    pub tags: ConditionTags,
    pub classifier_version: String,
    /// Locator the evaluator resolves to the patch and its annotation.
    pub payload_ref: String,
}

/// First 8 bytes of `sha256(run_id NUL frame_id)` as hex.
pub fn task_id(run_id: &str, frame_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(run_id.as_bytes());
    h.update([0u8]);
    h.update(frame_id.as_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// One task per localization frame matching `query`, sorted by task id.
pub fn create_tasks(
    dataset: &Dataset,
    query: &str,
    classifier_version: &str,
    run_id: &str,
) -> Result<Vec<EvalTask>, HarnessError> {
    let query = Query::parse(query)?;
    let mut tasks: Vec<EvalTask> = dataset
        .frames()
        .iter()
        .filter(|f| f.annotation_kind == AnnotationKind::Localization && query.matches(f))
        .map(|f| EvalTask {
            task_id: task_id(run_id, &f.frame_id),
            frame_id: f.frame_id.clone(),
            video_id: f.video_id.clone(),
            tags: f.tags,
            classifier_version: classifier_version.to_string(),
            payload_ref: format!("frame:{}", f.frame_id),
        })
        .collect();
    tasks.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    if let Some(w) = tasks.windows(2).find(|w| w[0].task_id == w[1].task_id) {
        return Err(HarnessError::DuplicateTask(w[0].task_id.clone()));
    }
    Ok(tasks)
}
