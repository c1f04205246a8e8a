use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boost::StrongClassifier;
use crate::dataset::{AnnotatedFrame, ConditionTags, Dataset};
use crate::haar::{FeatureExtractor, FeatureIndex};
use crate::presence::ConfusionMatrix;

use super::task::EvalTask;
use super::HarnessError;

/// Successful evaluation of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub raw_score: f64,
    pub runtime_us: u64,
}

pub trait Evaluator: Sync {
    fn evaluate(&self, task: &EvalTask) -> Result<Evaluation, String>;
}

impl<F> Evaluator for F
where
    F: Fn(&EvalTask) -> Result<Evaluation, String> + Sync,
{
    fn evaluate(&self, task: &EvalTask) -> Result<Evaluation, String> {
        self(task)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskStatus {
    Completed { evaluation: Evaluation, attempt: u32 },
    Failed { attempts: u32, error: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task_id: String,
    pub frame_id: String,
    pub video_id: String,
    pub tags: ConditionTags,
    pub status: TaskStatus,
}

impl TaskResult {
    pub fn is_completed(&self) -> bool {
        matches!(self.status, TaskStatus::Completed { .. })
    }
}

/// Which attempts of which tasks fail, fixed before the run starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultPlan {
    pub failures: BTreeMap<String, BTreeSet<u32>>,
    /// Retries after the first attempt; a task gets `1 + max_retries` tries.
    pub max_retries: u32,
}

impl FaultPlan {
    pub fn none(max_retries: u32) -> Self {
        Self {
            failures: BTreeMap::new(),
            max_retries,
        }
    }

    pub fn fail(mut self, task_id: &str, attempts: impl IntoIterator<Item = u32>) -> Self {
        self.failures
            .entry(task_id.to_string())
            .or_default()
            .extend(attempts);
        self
    }

    /// Each task fails with probability `rate` on attempts `1..=k`, `k`
    /// drawn uniformly from `1..=max_failures`.
    pub fn seeded(tasks: &[EvalTask], seed: u64, rate: f64, max_failures: u32, max_retries: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut plan = Self::none(max_retries);
        for t in tasks {
            if max_failures > 0 && rng.gen_bool(rate.clamp(0.0, 1.0)) {
                let k = rng.gen_range(1..=max_failures);
                plan = plan.fail(&t.task_id, 1..=k);
            }
        }
        plan
    }

    pub fn fails(&self, task_id: &str, attempt: u32) -> bool {
        self.failures.get(task_id).is_some_and(|a| a.contains(&attempt))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub worker_count: usize,
    /// Seeds the dispatch order so tests can vary the interleaving.
    pub scheduler_seed: u64,
    /// Abort once more than this fraction of all tasks has failed.
    pub max_failed_fraction: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            worker_count: 1,
            scheduler_seed: 0,
            max_failed_fraction: None,
        }
    }
}

fn execute(task: &EvalTask, plan: &FaultPlan, evaluator: &dyn Evaluator) -> TaskResult {
    let attempts = 1 + plan.max_retries;
    let mut last_error = String::new();
    let mut status = None;
    for attempt in 1..=attempts {
        if plan.fails(&task.task_id, attempt) {
            last_error = format!("injected fault on attempt {attempt}");
            continue;
        }
        match evaluator.evaluate(task) {
            Ok(evaluation) => {
                status = Some(TaskStatus::Completed { evaluation, attempt });
                break;
            }
            Err(e) => last_error = e,
        }
    }
    TaskResult {
        task_id: task.task_id.clone(),
        frame_id: task.frame_id.clone(),
        video_id: task.video_id.clone(),
        tags: task.tags,
        status: status.unwrap_or(TaskStatus::Failed {
            attempts,
            error: last_error,
        }),
    }
}

/// Runs every task on a pool of `worker_count` threads. Workers pull from a
/// shared cursor over a seeded permutation of the tasks and send results
/// over a channel; results come back sorted by task id, so the output does
/// not depend on worker count or interleaving.
pub fn run(
    tasks: &[EvalTask],
    plan: &FaultPlan,
    evaluator: &dyn Evaluator,
    options: &RunOptions,
) -> Result<Vec<TaskResult>, HarnessError> {
    if options.worker_count == 0 {
        return Err(HarnessError::InvalidConfig("worker_count must be at least 1".to_string()));
    }
    if let Some(f) = options.max_failed_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(HarnessError::InvalidConfig(format!(
                "max_failed_fraction must be in [0, 1], got {f}"
            )));
        }
    }
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(options.scheduler_seed));
    let cursor = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    let tripped = AtomicBool::new(false);
    let limit = options
        .max_failed_fraction
        .map(|f| (f * tasks.len() as f64).floor() as usize);
    let (tx, rx) = mpsc::channel();

    std::thread::scope(|scope| {
        for _ in 0..options.worker_count.min(tasks.len().max(1)) {
            let tx = tx.clone();
            let (order, cursor, failed, tripped) = (&order, &cursor, &failed, &tripped);
            scope.spawn(move || loop {
                if tripped.load(Ordering::SeqCst) {
                    break;
                }
                let k = cursor.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = order.get(k) else { break };
                let result = execute(&tasks[i], plan, evaluator);
                if !result.is_completed() {
                    let n = failed.fetch_add(1, Ordering::SeqCst) + 1;
                    if limit.is_some_and(|l| n > l) {
                        tripped.store(true, Ordering::SeqCst);
                    }
                }
                if tx.send(result).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    if tripped.load(Ordering::SeqCst) {
        return Err(HarnessError::CircuitOpen {
            failed: failed.load(Ordering::SeqCst),
            total: tasks.len(),
        });
    }
    let mut results: Vec<TaskResult> = rx.into_iter().collect();
    results.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    Ok(results)
}

/// Scores a task's frame with a strong classifier and compares the call
/// against the frame's label.
pub struct ClassifierEvaluator<'a> {
    frames: HashMap<&'a str, &'a AnnotatedFrame>,
    classifier: &'a StrongClassifier,
    extractor: FeatureExtractor<'a>,
    dims: Vec<usize>,
    /// Wall-clock timing makes results run-dependent; off by default.
    pub measure_runtime: bool,
}

impl<'a> ClassifierEvaluator<'a> {
    pub fn new(
        dataset: &'a Dataset,
        classifier: &'a StrongClassifier,
        index: &'a FeatureIndex,
    ) -> Result<Self, HarnessError> {
        if classifier.feature_index_version != index.version() {
            return Err(HarnessError::InvalidConfig(format!(
                "classifier expects feature index {}, index is {}",
                classifier.feature_index_version,
                index.version()
            )));
        }
        let dims = classifier.dimensions();
        if dims.iter().any(|&d| d >= index.len()) {
            return Err(HarnessError::InvalidConfig(
                "classifier uses dimensions outside the feature index".to_string(),
            ));
        }
        Ok(Self {
            frames: dataset.frames().iter().map(|f| (f.frame_id.as_str(), f)).collect(),
            classifier,
            extractor: FeatureExtractor::new(index),
            dims,
            measure_runtime: false,
        })
    }
}

impl Evaluator for ClassifierEvaluator<'_> {
    fn evaluate(&self, task: &EvalTask) -> Result<Evaluation, String> {
        let start = Instant::now();
        let frame_id = task
            .payload_ref
            .strip_prefix("frame:")
            .ok_or_else(|| format!("unsupported payload {:?}", task.payload_ref))?;
        let frame = self
            .frames
            .get(frame_id)
            .ok_or_else(|| format!("frame {frame_id} not in dataset"))?;
        let raw_score = self
            .classifier
            .score_sparse(&self.extractor.sparse(&frame.patch, &self.dims));
        let detected = self.classifier.decide(raw_score).is_vehicle();
        let mut confusion = ConfusionMatrix::default();
        confusion.record(detected, frame.label.is_vehicle());
        let runtime_us = if self.measure_runtime {
            start.elapsed().as_micros() as u64
        } else {
            0
        };
        Ok(Evaluation {
            confusion,
            raw_score,
            runtime_us,
        })
    }
}
