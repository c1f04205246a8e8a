use std::collections::{BTreeMap, BTreeSet};

use crate::presence::{overall_accuracy, ConfusionMatrix};

use super::run::{TaskResult, TaskStatus};
use super::HarnessError;

/// `(category, value)`, e.g. `("time_of_day", "night")`.
pub type TagKey = (String, String);

/// Merged statistics of a set of task results. `merge` is associative and
/// commutative with `default()` as identity, so any grouping or ordering of
/// results gives the same value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregateStats {
    pub total: ConfusionMatrix,
    pub per_tag: BTreeMap<TagKey, ConfusionMatrix>,
    pub per_video: BTreeMap<String, ConfusionMatrix>,
    pub runtime_us: u64,
    pub succeeded: u64,
    /// Completed tasks that needed more than one attempt.
    pub retried: u64,
    pub failed: u64,
    pub failed_tasks: BTreeSet<String>,
    pub task_ids: BTreeSet<String>,
}

impl AggregateStats {
    pub fn from_result(r: &TaskResult) -> Self {
        let mut s = Self::default();
        s.task_ids.insert(r.task_id.clone());
        match &r.status {
            TaskStatus::Completed { evaluation, attempt } => {
                let cm = evaluation.confusion;
                s.total = cm;
                for (cat, val) in r.tags.categories() {
                    *s.per_tag.entry((cat.to_string(), val)).or_default() += cm;
                }
                s.per_video.insert(r.video_id.clone(), cm);
                s.runtime_us = evaluation.runtime_us;
                s.succeeded = 1;
                s.retried = u64::from(*attempt > 1);
            }
            TaskStatus::Failed { .. } => {
                s.failed = 1;
                s.failed_tasks.insert(r.task_id.clone());
            }
        }
        s
    }

    /// Combines two disjoint aggregates; overlapping task ids are rejected.
    pub fn merge(mut self, other: Self) -> Result<Self, HarnessError> {
        if let Some(dup) = self.task_ids.intersection(&other.task_ids).next() {
            return Err(HarnessError::DuplicateTask(dup.clone()));
        }
        self.total += other.total;
        for (k, v) in other.per_tag {
            *self.per_tag.entry(k).or_default() += v;
        }
        for (k, v) in other.per_video {
            *self.per_video.entry(k).or_default() += v;
        }
        self.runtime_us += other.runtime_us;
        self.succeeded += other.succeeded;
        self.retried += other.retried;
        self.failed += other.failed;
        self.failed_tasks.extend(other.failed_tasks);
        self.task_ids.extend(other.task_ids);
        Ok(self)
    }

    pub fn overall_accuracy(&self) -> Option<f64> {
        overall_accuracy(&self.total).ok()
    }

    /// `(video_id, accuracy)` for every video with at least one completed task.
    pub fn per_video_accuracy(&self) -> Vec<(String, f64)> {
        self.per_video
            .iter()
            .filter_map(|(v, cm)| overall_accuracy(cm).ok().map(|a| (v.clone(), a)))
            .collect()
    }
}

/// Folds results into one aggregate, rejecting duplicate task ids.
pub fn aggregate(results: &[TaskResult]) -> Result<AggregateStats, HarnessError> {
    results
        .iter()
        .try_fold(AggregateStats::default(), |acc, r| acc.merge(AggregateStats::from_result(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ConditionTags;
    use crate::harness::Evaluation;

    fn result(id: &str, video: &str, tp: u64, attempt: u32) -> TaskResult {
        TaskResult {
            task_id: id.to_string(),
            frame_id: id.to_string(),
            video_id: video.to_string(),
            tags: ConditionTags::default(),
            status: TaskStatus::Completed {
                evaluation: Evaluation {
                    confusion: ConfusionMatrix { tp, fn_: 1 - tp, fp: 0, tn: 0 },
                    raw_score: 0.1,
                    runtime_us: 7,
                },
                attempt,
            },
        }
    }

    #[test]
    fn single_result_is_its_own_aggregate() {
        let r = result("a", "v1", 1, 2);
        let s = aggregate(std::slice::from_ref(&r)).unwrap();
        assert_eq!(s.total, ConfusionMatrix { tp: 1, fn_: 0, fp: 0, tn: 0 });
        assert_eq!((s.succeeded, s.retried, s.failed, s.runtime_us), (1, 1, 0, 7));
        assert_eq!(s.per_video_accuracy(), vec![("v1".to_string(), 1.0)]);
    }

    #[test]
    fn duplicate_task_ids_are_rejected() {
        let r = result("a", "v1", 1, 1);
        assert!(matches!(
            aggregate(&[r.clone(), r]),
            Err(HarnessError::DuplicateTask(id)) if id == "a"
        ));
    }

    #[test]
    fn failed_tasks_are_counted_but_not_scored() {
        let mut f = result("b", "v2", 1, 1);
        f.status = TaskStatus::Failed { attempts: 4, error: "x".to_string() };
        let s = aggregate(&[result("a", "v1", 0, 1), f]).unwrap();
        assert_eq!(s.failed, 1);
        assert_eq!(s.total.total(), 1);
        assert!(!s.per_video.contains_key("v2"));
        assert_eq!(s.overall_accuracy(), Some(0.0));
    }
}
