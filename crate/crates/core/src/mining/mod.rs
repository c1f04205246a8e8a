//! Positive/negative mining: grow the training set with population samples
//! the current classifier gets wrong, then cull noisy and redundant samples.

mod cull;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::boost::{
    score_patches, train_on_matrix, BoostError, FeatureMatrix, StrongClassifier, TrainConfig,
};
use crate::dataset::{
    sparse_random_sample, AnnotatedFrame, AnnotationKind, ClassLabel, Dataset, DatasetError,
    ImagePatch,
};
use crate::haar::{FeatureExtractor, FeatureIndex};
use crate::par::Parallelism;

pub use cull::{
    persistent_heavy, rejection_sample, CullConfig, CullOutcome, CullReason, Projection,
    SampleWeights,
};

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("invalid mining configuration: {0}")]
    InvalidConfig(String),
    #[error("label sequences differ in length ({predicted} predicted, {actual} actual)")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("cannot compute an error over zero labels")]
    Empty,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Boost(#[from] BoostError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningConfig {
    /// Fraction of the population drawn each iteration, in (0, 1].
    pub p: f64,
    pub max_iterations: usize,
    /// Stop once the classifier has at least this many stumps.
    pub complexity_cap: usize,
    pub error_tol: f64,
    /// Stop when the best sampled error of the last `plateau_window`
    /// iterations does not beat the best before them; 0 disables.
    pub plateau_window: usize,
    pub seed: u64,
    pub cull: CullConfig,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            p: 0.25,
            max_iterations: 10,
            complexity_cap: 1000,
            error_tol: 0.0,
            plateau_window: 0,
            seed: 0,
            cull: CullConfig::default(),
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(MiningError::InvalidConfig(format!("p must be in (0, 1], got {}", self.p)));
        }
        if self.max_iterations == 0 || self.complexity_cap == 0 {
            return Err(MiningError::InvalidConfig(
                "max_iterations and complexity_cap must be at least 1".to_string(),
            ));
        }
        if self.error_tol.is_nan() || self.error_tol < 0.0 {
            return Err(MiningError::InvalidConfig("error_tol must be non-negative".to_string()));
        }
        self.cull.validate().map_err(MiningError::InvalidConfig)
    }
}

/// Number of positions where the two label sequences differ.
pub fn mismatch_count(predicted: &[ClassLabel], actual: &[ClassLabel]) -> Result<usize, MiningError> {
    if predicted.len() != actual.len() {
        return Err(MiningError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    Ok(predicted.iter().zip(actual).filter(|(p, a)| p != a).count())
}

/// Mismatch rate between predicted and actual labels.
pub fn calculate_error(predicted: &[ClassLabel], actual: &[ClassLabel]) -> Result<f64, MiningError> {
    let wrong = mismatch_count(predicted, actual)?;
    if actual.is_empty() {
        return Err(MiningError::Empty);
    }
    Ok(wrong as f64 / actual.len() as f64)
}

/// Ground-truth lookup standing in for the human annotator.
#[derive(Debug)]
pub struct LabelOracle {
    labels: HashMap<String, ClassLabel>,
}

impl LabelOracle {
    pub fn new(population: &Dataset) -> Self {
        Self {
            labels: population
                .frames()
                .iter()
                .map(|f| (f.frame_id.clone(), f.label))
                .collect(),
        }
    }

    pub fn label(&self, frame_id: &str) -> Result<ClassLabel, DatasetError> {
        self.labels
            .get(frame_id)
            .copied()
            .ok_or_else(|| DatasetError::UnknownFrame(frame_id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Size of the training set this iteration's classifier was fit on.
    pub sample_count: usize,
    pub sampled_count: usize,
    pub sampled_error: f64,
    pub mismatches: usize,
    pub n_c: usize,
    pub added: Vec<String>,
    pub culled: Vec<(String, CullReason)>,
    pub classifier: StrongClassifier,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningHistory {
    pub records: Vec<IterationRecord>,
}

impl MiningHistory {
    pub fn sampled_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sampled_error).collect()
    }

    /// One tab-separated row per iteration.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "iteration\tsample_count\tadded_count\tculled_count\tsampled_error\tmismatches\tsampled_count\tn_c\n",
        );
        for r in &self.records {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:?}\t{}\t{}\t{}",
                r.iteration,
                r.sample_count,
                r.added.len(),
                r.culled.len(),
                r.sampled_error,
                r.mismatches,
                r.sampled_count,
                r.n_c
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiningStop {
    ErrorTolerance,
    ComplexityCap,
    MaxIterations,
    PopulationExhausted,
    Plateau,
}

impl MiningStop {
    pub fn as_str(self) -> &'static str {
        match self {
            MiningStop::ErrorTolerance => "error-tolerance",
            MiningStop::ComplexityCap => "complexity-cap",
            MiningStop::MaxIterations => "max-iterations",
            MiningStop::PopulationExhausted => "population-exhausted",
            MiningStop::Plateau => "plateau",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MiningOutcome {
    pub samples: Dataset,
    /// Classifier trained in the last iteration.
    pub classifier: StrongClassifier,
    pub history: MiningHistory,
    pub stop_reason: MiningStop,
}

fn plateaued(errors: &[f64], window: usize) -> bool {
    if window == 0 || errors.len() <= window {
        return false;
    }
    let split = errors.len() - window;
    let before = errors[..split].iter().copied().fold(f64::INFINITY, f64::min);
    let recent = errors[split..].iter().copied().fold(f64::INFINITY, f64::min);
    recent >= before
}

struct FeatureCache<'a> {
    extractor: FeatureExtractor<'a>,
    projection: Projection,
    rows: HashMap<String, Vec<f64>>,
    embeddings: HashMap<String, Vec<f64>>,
}

impl<'a> FeatureCache<'a> {
    fn new(index: &'a FeatureIndex, cull: &CullConfig) -> Self {
        Self {
            extractor: FeatureExtractor::new(index),
            projection: Projection::new(index.len(), cull.projection_dims, cull.projection_seed),
            rows: HashMap::new(),
            embeddings: HashMap::new(),
        }
    }

    fn ensure(&mut self, frames: &[AnnotatedFrame], par: &Parallelism) {
        let missing: Vec<&AnnotatedFrame> = frames
            .iter()
            .filter(|f| !self.rows.contains_key(&f.frame_id))
            .collect();
        let extractor = &self.extractor;
        let projection = &self.projection;
        let computed = par.map_range(missing.len(), |i| {
            let row = extractor.vector(&missing[i].patch).values;
            let emb = projection.embed(|f| row[f]);
            (row, emb)
        });
        for (frame, (row, emb)) in missing.into_iter().zip(computed) {
            self.rows.insert(frame.frame_id.clone(), row);
            self.embeddings.insert(frame.frame_id.clone(), emb);
        }
    }
}

/// Runs the mining loop: train on S, draw a sparse sample of the population,
/// label it with the oracle, measure the sampled error, absorb misclassified
/// frames into S and cull. Stops when the sampled error reaches `error_tol`,
/// the classifier reaches `complexity_cap` stumps, `max_iterations` trainings
/// have run, S covers the population, or the error plateaus.
///
/// Every iteration absorbs and culls before the convergence check, so the
/// returned samples include the last iteration's additions. Frames culled
/// once are never re-admitted.
pub fn mine(
    initial: &Dataset,
    population: &Dataset,
    cfg: &MiningConfig,
    train_cfg: &TrainConfig,
    index: &FeatureIndex,
) -> Result<MiningOutcome, MiningError> {
    cfg.validate()?;
    train_cfg.validate()?;
    if initial.is_empty() {
        return Err(DatasetError::Empty.into());
    }
    if !initial.has_both_classes() {
        return Err(BoostError::SingleClass.into());
    }
    let par = Parallelism::new(train_cfg.parallel_width);
    let oracle = LabelOracle::new(population);
    let mut cache = FeatureCache::new(index, &cfg.cull);
    let mut s = initial.clone();
    let mut rejected: HashSet<String> = HashSet::new();
    let mut history = MiningHistory::default();

    let mut iteration = 0;
    loop {
        cache.ensure(s.frames(), &par);
        let rows: Vec<Vec<f64>> = s
            .frames()
            .iter()
            .map(|f| cache.rows[&f.frame_id].clone())
            .collect();
        let labels: Vec<ClassLabel> = s.frames().iter().map(|f| f.label).collect();
        let matrix = FeatureMatrix::from_rows(&rows, index.version(), &par);
        drop(rows);
        let trained = train_on_matrix(&matrix, &labels, train_cfg, &par)?;
        drop(matrix);
        let classifier = trained.classifier.clone();

        let sampled = sparse_random_sample(population, cfg.p, cfg.seed.wrapping_add(iteration as u64))?;
        let patches: Vec<&ImagePatch> = sampled.frames().iter().map(|f| &f.patch).collect();
        let scores = score_patches(&classifier, index, &patches, &par)?;
        let predicted: Vec<ClassLabel> = scores.iter().map(|&r| classifier.decide(r)).collect();
        let actual = sampled
            .frames()
            .iter()
            .map(|f| oracle.label(&f.frame_id))
            .collect::<Result<Vec<_>, _>>()?;
        let mismatches = mismatch_count(&predicted, &actual)?;
        let sampled_error = if actual.is_empty() {
            0.0
        } else {
            mismatches as f64 / actual.len() as f64
        };

        let mut record = IterationRecord {
            iteration,
            sample_count: s.len(),
            sampled_count: sampled.len(),
            sampled_error,
            mismatches,
            n_c: classifier.n_c(),
            added: Vec::new(),
            culled: Vec::new(),
            classifier: classifier.clone(),
        };
        let in_s: HashSet<&str> = s.frames().iter().map(|f| f.frame_id.as_str()).collect();
        let mut additions = Vec::new();
        for ((frame, p), a) in sampled.frames().iter().zip(&predicted).zip(&actual) {
            if p != a && !in_s.contains(frame.frame_id.as_str()) && !rejected.contains(&frame.frame_id)
            {
                let mut added = frame.clone();
                added.label = *a;
                added.annotation_kind = AnnotationKind::Boundary;
                additions.push(added);
            }
        }
        drop(in_s);
        record.added = additions.iter().map(|f| f.frame_id.clone()).collect();
        cache.ensure(&additions, &par);

        let n_old = s.len();
        let mut priority = trained
            .weight_trajectory
            .last()
            .cloned()
            .unwrap_or_else(|| vec![1.0 / n_old as f64; n_old]);
        let top = priority.iter().copied().fold(0.0, f64::max);
        priority.extend(std::iter::repeat_n(top, additions.len()));
        let trajectory: Vec<Vec<f64>> = trained
            .weight_trajectory
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row.resize(n_old + additions.len(), 0.0);
                row
            })
            .collect();
        let (mut frames, zones, provenance) = s.into_parts();
        frames.extend(additions);
        let grown = Dataset::new(frames, zones, provenance)?;
        let embeddings: Vec<Vec<f64>> = grown
            .frames()
            .iter()
            .map(|f| cache.embeddings[&f.frame_id].clone())
            .collect();
        let culled = rejection_sample(
            &grown,
            &SampleWeights {
                priority,
                trajectory,
            },
            &embeddings,
            &cache.projection,
            &cfg.cull,
        );
        for (id, _) in &culled.removed {
            rejected.insert(id.clone());
            cache.rows.remove(id);
            cache.embeddings.remove(id);
        }
        record.culled = culled.removed;
        s = culled.kept;
        history.records.push(record);

        let in_s: HashSet<&str> = s.frames().iter().map(|f| f.frame_id.as_str()).collect();
        let exhausted = population
            .frames()
            .iter()
            .all(|f| in_s.contains(f.frame_id.as_str()));
        let stop = if sampled_error <= cfg.error_tol {
            Some(MiningStop::ErrorTolerance)
        } else if classifier.n_c() >= cfg.complexity_cap {
            Some(MiningStop::ComplexityCap)
        } else if exhausted {
            Some(MiningStop::PopulationExhausted)
        } else if iteration + 1 >= cfg.max_iterations {
            Some(MiningStop::MaxIterations)
        } else if plateaued(&history.sampled_errors(), cfg.plateau_window) {
            Some(MiningStop::Plateau)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            return Ok(MiningOutcome {
                samples: s,
                classifier,
                history,
                stop_reason,
            });
        }
        iteration += 1;
    }
}
