use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ClassLabel, Dataset};

/// Parameters of the rejection step that removes noisy and overrepresented
/// samples from the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct CullConfig {
    /// Ball radius, in projected RMS feature units, for duplicate detection.
    pub duplicate_radius: f64,
    /// Maximum samples kept inside any one ball.
    pub neighborhood_cap: usize,
    /// A sample is heavy in a round when it ranks in the top `1 - q` share of weights.
    pub noise_weight_percentile: f64,
    /// Consecutive heavy rounds after which a sample is treated as noise.
    pub noise_persistence: usize,
    pub projection_seed: u64,
    pub projection_dims: usize,
}

impl Default for CullConfig {
    fn default() -> Self {
        Self {
            duplicate_radius: 1e-6,
            neighborhood_cap: 4,
            noise_weight_percentile: 0.99,
            noise_persistence: 12,
            projection_seed: 0x5eed,
            projection_dims: 64,
        }
    }
}

impl CullConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.neighborhood_cap == 0 || self.noise_persistence == 0 || self.projection_dims == 0
        {
            return Err("cull counts must be at least 1".to_string());
        }
        if !(self.noise_weight_percentile > 0.0 && self.noise_weight_percentile < 1.0) {
            return Err(format!(
                "noise_weight_percentile must be in (0, 1), got {}",
                self.noise_weight_percentile
            ));
        }
        if self.duplicate_radius.is_nan() || self.duplicate_radius < 0.0 {
            return Err("duplicate_radius must be non-negative".to_string());
        }
        Ok(())
    }
}

/// Fixed Rademacher projection of feature vectors to a few dimensions.
#[derive(Debug, Clone)]
pub struct Projection {
    n_features: usize,
    dims: usize,
    signs: Vec<bool>,
}

impl Projection {
    pub fn new(n_features: usize, dims: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = (0..n_features * dims).map(|_| rng.gen_bool(0.5)).collect();
        Self {
            n_features,
            dims,
            signs,
        }
    }

    /// `R f / sqrt(n_features)`; Euclidean distance between embeddings divided
    /// by `sqrt(dims)` approximates the RMS per-feature difference.
    pub fn embed(&self, values: impl Fn(usize) -> f64) -> Vec<f64> {
        let scale = 1.0 / (self.n_features.max(1) as f64).sqrt();
        let mut out = vec![0.0; self.dims];
        for f in 0..self.n_features {
            let v = values(f);
            let row = &self.signs[f * self.dims..(f + 1) * self.dims];
            for (o, &s) in out.iter_mut().zip(row) {
                if s {
                    *o += v;
                } else {
                    *o -= v;
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (sq / self.dims as f64).sqrt()
    }
}

/// Boosting weights of the samples being culled.
#[derive(Debug, Clone, Default)]
pub struct SampleWeights {
    /// Preference when thinning a neighborhood; higher is kept first.
    pub priority: Vec<f64>,
    /// Per-round weights (rows), each aligned with the samples.
    pub trajectory: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CullReason {
    Noisy,
    Overrepresented,
}

#[derive(Debug, Clone)]
pub struct CullOutcome {
    pub kept: Dataset,
    pub removed: Vec<(String, CullReason)>,
}

/// Samples that were heavy for `persistence` consecutive rounds. A weight is
/// heavy when the samples at or above it, ties included, fit in the top
/// `1 - percentile` share of the round (at least one sample) and it is above
/// the round's mean. Stumps give whole groups identical scores, so a tied
/// block of hard samples is not mistaken for a few outliers.
pub fn persistent_heavy(trajectory: &[Vec<f64>], n: usize, percentile: f64, persistence: usize) -> Vec<bool> {
    let mut run = vec![0usize; n];
    let mut flagged = vec![false; n];
    for row in trajectory {
        if row.is_empty() {
            continue;
        }
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let allowance = (((1.0 - percentile) * row.len() as f64).floor() as usize).max(1);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        for (i, &w) in row.iter().enumerate().take(n) {
            let at_or_above = sorted.len() - sorted.partition_point(|&v| v < w);
            if at_or_above <= allowance && w > mean {
                run[i] += 1;
                if run[i] >= persistence {
                    flagged[i] = true;
                }
            } else {
                run[i] = 0;
            }
        }
    }
    flagged
}

/// Removes noisy samples (persistently heavy boosting weight) and thins
/// dense neighborhoods, keeping the highest-priority samples. Never removes
/// the last remaining sample of a class. Output preserves input order.
pub fn rejection_sample(
    s: &Dataset,
    weights: &SampleWeights,
    embeddings: &[Vec<f64>],
    projection: &Projection,
    cfg: &CullConfig,
) -> CullOutcome {
    let n = s.len();
    assert_eq!(weights.priority.len(), n, "priority weights must align with samples");
    assert_eq!(embeddings.len(), n, "embeddings must align with samples");
    let frames = s.frames();
    let mut class_left = [
        s.count_label(ClassLabel::Vehicle),
        s.count_label(ClassLabel::NonVehicle),
    ];
    let class_slot = |l: ClassLabel| usize::from(l == ClassLabel::NonVehicle);
    let mut removed: Vec<Option<CullReason>> = vec![None; n];

    let noisy = persistent_heavy(
        &weights.trajectory,
        n,
        cfg.noise_weight_percentile,
        cfg.noise_persistence,
    );
    for i in 0..n {
        let slot = class_slot(frames[i].label);
        if noisy[i] && class_left[slot] > 1 {
            removed[i] = Some(CullReason::Noisy);
            class_left[slot] -= 1;
        }
    }

    let mut by_priority: Vec<usize> = (0..n).filter(|&i| removed[i].is_none()).collect();
    by_priority.sort_by(|&a, &b| {
        weights.priority[b]
            .total_cmp(&weights.priority[a])
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::with_capacity(n);
    for i in by_priority {
        let crowd = kept
            .iter()
            .filter(|&&k| projection.distance(&embeddings[i], &embeddings[k]) <= cfg.duplicate_radius)
            .count();
        let slot = class_slot(frames[i].label);
        if crowd >= cfg.neighborhood_cap && class_left[slot] > 1 {
            removed[i] = Some(CullReason::Overrepresented);
            class_left[slot] -= 1;
        } else {
            kept.push(i);
        }
    }

    let mut kept_frames = Vec::with_capacity(n);
    let mut removed_ids = Vec::new();
    for (i, frame) in frames.iter().enumerate() {
        match removed[i] {
            None => kept_frames.push(frame.clone()),
            Some(reason) => removed_ids.push((frame.frame_id.clone(), reason)),
        }
    }
    CullOutcome {
        kept: s.with_frames(kept_frames).expect("subset of a valid dataset"),
        removed: removed_ids,
    }
}
