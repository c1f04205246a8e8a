use std::fmt::Write as _;

use crate::dataset::{ClassLabel, Dataset, ImagePatch};
use crate::haar::{FeatureExtractor, FeatureIndex, IndexVersion};
use crate::par::Parallelism;

use super::classifier::StrongClassifier;
use super::stump::{fit_sorted, sign, sorted_order, Stump, StumpFit};
use super::BoostError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Upper bound on the number of stumps.
    pub max_rounds: usize,
    /// Stop once ensemble training error is at or below this; `None` disables.
    pub error_floor: Option<f64>,
    /// Stop when training error improved by less than `plateau_tol`
    /// (relative) over this many rounds; 0 disables.
    pub plateau_window: usize,
    pub plateau_tol: f64,
    /// Threads used for candidate fitting and feature extraction.
    pub parallel_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_rounds: 50,
            error_floor: Some(0.0),
            plateau_window: 0,
            plateau_tol: 0.0,
            parallel_width: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), BoostError> {
        let bad_floor = self.error_floor.is_some_and(|f| f.is_nan() || f < 0.0);
        if self.max_rounds == 0 || bad_floor || self.plateau_tol.is_nan() || self.plateau_tol < 0.0 {
            return Err(BoostError::InvalidConfig(format!(
                "max_rounds must be >= 1 and tolerances >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Column-major feature values with per-dimension sort orders computed once.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    n_samples: usize,
    n_dims: usize,
    columns: Vec<f64>,
    orders: Vec<u32>,
    version: IndexVersion,
}

impl FeatureMatrix {
    /// Extracts canonicalized features for every patch.
    pub fn from_patches(patches: &[&ImagePatch], index: &FeatureIndex, par: &Parallelism) -> Self {
        let extractor = FeatureExtractor::new(index);
        let rows = par.map_range(patches.len(), |i| extractor.vector(patches[i]).values);
        Self::from_rows(&rows, index.version(), par)
    }

    pub fn from_rows(rows: &[Vec<f64>], version: IndexVersion, par: &Parallelism) -> Self {
        let n_samples = rows.len();
        let n_dims = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_dims), "ragged feature rows");
        let per_dim = par.map_range(n_dims, |d| {
            let column: Vec<f64> = rows.iter().map(|r| r[d]).collect();
            let order = sorted_order(&column);
            (column, order)
        });
        let mut columns = Vec::with_capacity(n_samples * n_dims);
        let mut orders = Vec::with_capacity(n_samples * n_dims);
        for (c, o) in per_dim {
            columns.extend(c);
            orders.extend(o);
        }
        Self {
            n_samples,
            n_dims,
            columns,
            orders,
            version,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn version(&self) -> IndexVersion {
        self.version
    }

    pub fn column(&self, d: usize) -> &[f64] {
        &self.columns[d * self.n_samples..(d + 1) * self.n_samples]
    }

    fn order(&self, d: usize) -> &[u32] {
        &self.orders[d * self.n_samples..(d + 1) * self.n_samples]
    }

    pub fn value(&self, sample: usize, d: usize) -> f64 {
        self.columns[d * self.n_samples + sample]
    }
}

/// One completed boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub stump: Stump,
    /// Weighted misclassification of the chosen stump under the round's weights.
    pub weighted_error: f64,
    /// Misclassification rate of the ensemble after this round.
    pub training_error: f64,
}

/// Mutable boosting state, advanced one round at a time.
#[derive(Debug, Clone)]
pub struct BoostState {
    /// Normalized weights used to select the most recent stump.
    pub weights: Vec<f64>,
    /// Raw additive score `F(f_j)` of the current ensemble per sample.
    pub scores: Vec<f64>,
    pub round: usize,
    pub history: Vec<RoundRecord>,
    /// Weights of every round so far, for noise analysis during mining.
    pub weight_trajectory: Vec<Vec<f64>>,
}

impl BoostState {
    pub fn new(n_samples: usize) -> Self {
        Self {
            weights: vec![1.0 / n_samples as f64; n_samples],
            scores: vec![0.0; n_samples],
            round: 0,
            history: Vec::new(),
            weight_trajectory: Vec::new(),
        }
    }

    pub fn stumps(&self) -> Vec<Stump> {
        self.history.iter().map(|r| r.stump).collect()
    }

    /// `exp(-y F)` normalized to sum 1, computed stably.
    pub fn updated_weights(&self, ys: &[f64]) -> Result<Vec<f64>, BoostError> {
        let margins: Vec<f64> = ys.iter().zip(&self.scores).map(|(y, f)| -y * f).collect();
        let top = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(BoostError::Divergence(format!("non-finite margin {top}")));
        }
        let mut w: Vec<f64> = margins.iter().map(|m| (m - top).exp()).collect();
        let total: f64 = w.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(BoostError::Divergence(format!("weight sum {total}")));
        }
        for v in &mut w {
            // underflow would break strict positivity
            *v = (*v / total).max(f64::MIN_POSITIVE);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(BoostError::Divergence("non-finite weight".to_string()));
        }
        Ok(w)
    }
}

fn label_signs(labels: &[ClassLabel]) -> Vec<f64> {
    labels.iter().map(|l| l.sign()).collect()
}

fn ensemble_error(scores: &[f64], ys: &[f64]) -> f64 {
    let wrong = scores
        .iter()
        .zip(ys)
        .filter(|(s, y)| sign(**s) != **y)
        .count();
    wrong as f64 / ys.len() as f64
}

/// Best stump over all dimensions, ties on weighted error broken by lowest
/// dimension index.
pub fn best_candidate(
    matrix: &FeatureMatrix,
    ys: &[f64],
    weights: &[f64],
    par: &Parallelism,
) -> Option<StumpFit> {
    par.min_by_range(
        matrix.n_dims(),
        |d| fit_sorted(matrix.column(d), matrix.order(d), ys, weights, d),
        |a, b| {
            a.weighted_error < b.weighted_error
                || (a.weighted_error == b.weighted_error && a.stump.d < b.stump.d)
        },
    )
}

/// One boosting round: reweight from the current ensemble, fit one candidate
/// per dimension, keep the one with least weighted error.
///
/// Fails with [`BoostError::NoWeakLearner`] when no candidate beats chance.
pub fn adaboost_round(
    mut state: BoostState,
    matrix: &FeatureMatrix,
    labels: &[ClassLabel],
    par: &Parallelism,
) -> Result<BoostState, BoostError> {
    if matrix.n_dims() == 0 || matrix.n_samples() == 0 {
        return Err(BoostError::InvalidInput("empty feature matrix".to_string()));
    }
    if labels.len() != matrix.n_samples() || state.scores.len() != matrix.n_samples() {
        return Err(BoostError::InvalidInput(
            "labels, state and features disagree on sample count".to_string(),
        ));
    }
    let ys = label_signs(labels);
    state.weights = state.updated_weights(&ys)?;
    let best = best_candidate(matrix, &ys, &state.weights, par).expect("non-empty dimensions");
    if best.weighted_error >= 0.5 {
        return Err(BoostError::NoWeakLearner {
            round: state.round,
            weighted_error: best.weighted_error,
        });
    }
    let column = matrix.column(best.stump.d);
    for (score, &v) in state.scores.iter_mut().zip(column) {
        *score += best.stump.eval(v);
    }
    let training_error = ensemble_error(&state.scores, &ys);
    state.weight_trajectory.push(state.weights.clone());
    state.history.push(RoundRecord {
        round: state.round,
        stump: best.stump,
        weighted_error: best.weighted_error,
        training_error,
    });
    state.round += 1;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ErrorFloor,
    Plateau,
    MaxRounds,
    NoWeakLearner,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ErrorFloor => "error-floor",
            StopReason::Plateau => "plateau",
            StopReason::MaxRounds => "max-rounds",
            StopReason::NoWeakLearner => "no-weak-learner",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub classifier: StrongClassifier,
    pub history: Vec<RoundRecord>,
    pub stop_reason: StopReason,
    /// Per-round sample weights (rows) aligned with the training samples.
    pub weight_trajectory: Vec<Vec<f64>>,
}

impl TrainingOutcome {
    /// Tab-separated per-round history table.
    pub fn history_table(&self) -> String {
        let mut out = String::from("round\tdimension\ta\tb\ttau\tweighted_error\ttraining_error\n");
        for r in &self.history {
            writeln!(
                out,
                "{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}",
                r.round,
                r.stump.d,
                r.stump.a,
                r.stump.b,
                r.stump.tau,
                r.weighted_error,
                r.training_error
            )
            .unwrap();
        }
        out
    }
}

fn plateaued(history: &[RoundRecord], window: usize, tol: f64) -> bool {
    if window == 0 || history.len() <= window {
        return false;
    }
    let prev = history[history.len() - 1 - window].training_error;
    let cur = history[history.len() - 1].training_error;
    (prev - cur) / prev.max(1e-12) < tol
}

/// Boosts on a prepared feature matrix until a stopping rule fires.
pub fn train_on_matrix(
    matrix: &FeatureMatrix,
    labels: &[ClassLabel],
    config: &TrainConfig,
    par: &Parallelism,
) -> Result<TrainingOutcome, BoostError> {
    config.validate()?;
    if matrix.n_samples() < 2 {
        return Err(BoostError::InvalidInput("need at least two samples".to_string()));
    }
    let has = |l: ClassLabel| labels.contains(&l);
    if !(has(ClassLabel::Vehicle) && has(ClassLabel::NonVehicle)) {
        return Err(BoostError::SingleClass);
    }
    let mut state = BoostState::new(matrix.n_samples());
    let stop_reason = loop {
        state = match adaboost_round(state.clone(), matrix, labels, par) {
            Ok(next) => next,
            Err(BoostError::NoWeakLearner { .. }) if state.round > 0 => {
                break StopReason::NoWeakLearner
            }
            Err(e) => return Err(e),
        };
        let last = state.history.last().expect("round appended");
        if config.error_floor.is_some_and(|f| last.training_error <= f) {
            break StopReason::ErrorFloor;
        }
        if plateaued(&state.history, config.plateau_window, config.plateau_tol) {
            break StopReason::Plateau;
        }
        if state.round >= config.max_rounds {
            break StopReason::MaxRounds;
        }
    };
    Ok(TrainingOutcome {
        classifier: StrongClassifier {
            stumps: state.stumps(),
            decision_threshold: 0.0,
            feature_index_version: matrix.version(),
        },
        history: state.history,
        stop_reason,
        weight_trajectory: state.weight_trajectory,
    })
}

/// Extracts features for every frame of `samples` and boosts on them.
pub fn train_adaboost(
    samples: &Dataset,
    index: &FeatureIndex,
    config: &TrainConfig,
) -> Result<TrainingOutcome, BoostError> {
    config.validate()?;
    if samples.len() < 2 {
        return Err(BoostError::InvalidInput("need at least two samples".to_string()));
    }
    if !samples.has_both_classes() {
        return Err(BoostError::SingleClass);
    }
    let par = Parallelism::new(config.parallel_width);
    let patches: Vec<&ImagePatch> = samples.frames().iter().map(|f| &f.patch).collect();
    let labels: Vec<ClassLabel> = samples.frames().iter().map(|f| f.label).collect();
    let matrix = FeatureMatrix::from_patches(&patches, index, &par);
    train_on_matrix(&matrix, &labels, config, &par)
}

/// Raw scores for a batch of patches, evaluating only the dimensions the
/// classifier uses.
pub fn score_patches(
    classifier: &StrongClassifier,
    index: &FeatureIndex,
    patches: &[&ImagePatch],
    par: &Parallelism,
) -> Result<Vec<f64>, BoostError> {
    if classifier.feature_index_version != index.version() {
        return Err(BoostError::VersionMismatch {
            classifier: classifier.feature_index_version,
            features: index.version(),
        });
    }
    let extractor = FeatureExtractor::new(index);
    let dims = classifier.dimensions();
    if let Some(&d) = dims.iter().find(|&&d| d >= index.len()) {
        return Err(BoostError::InvalidInput(format!(
            "stump dimension {d} outside index of {} features",
            index.len()
        )));
    }
    Ok(par.map_range(patches.len(), |i| {
        classifier.score_sparse(&extractor.sparse(patches[i], &dims))
    }))
}
