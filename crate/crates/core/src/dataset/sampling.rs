use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::types::{ClassLabel, Dataset};
use super::DatasetError;

/// Draws `ceil(p * |frames|)` frames uniformly without replacement.
/// The selected frames keep their original relative order.
pub fn sparse_random_sample(d: &Dataset, p: f64, seed: u64) -> Result<Dataset, DatasetError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "sampling fraction must be in (0, 1], got {p}"
        )));
    }
    if d.is_empty() {
        return Err(DatasetError::Empty);
    }
    let n = d.len();
    let k = ((p * n as f64).ceil() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    let frames = picked.into_iter().map(|i| d.frames()[i].clone()).collect();
    d.with_frames(frames)
}

/// Ground-truth label lookup standing in for a human annotator.
pub fn oracle_label(frame_id: &str, d: &Dataset) -> Result<ClassLabel, DatasetError> {
    d.frame(frame_id)
        .map(|f| f.label)
        .ok_or_else(|| DatasetError::UnknownFrame(frame_id.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, test: f64) -> Result<Self, DatasetError> {
        let r = Self { train, test };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let ok = self.train > 0.0
            && self.test >= 0.0
            && self.train <= 1.0
            && ((self.train + self.test) - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(DatasetError::InvalidArgument(format!(
                "split ratios must be non-negative with train > 0 and sum to 1, got {{{}, {}}}",
                self.train, self.test
            )))
        }
    }
}

/// Label-stratified split into `(train, test)`. The train part receives
/// `round(train * n)` frames, apportioned across classes by largest remainder.
pub fn partition(
    d: &Dataset,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    ratios.validate()?;
    let n = d.len();
    let n_train = ((ratios.train * n as f64).round() as usize).min(n);

    let classes = [ClassLabel::Vehicle, ClassLabel::NonVehicle];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&label| {
            let mut idx: Vec<usize> = (0..n).filter(|&i| d.frames()[i].label == label).collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect();

    let exact: Vec<f64> = members
        .iter()
        .map(|m| ratios.train * m.len() as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = n_train.saturating_sub(quota.iter().sum());
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(classes.len() * 2) {
        if remaining == 0 {
            break;
        }
        if quota[c] < members[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }

    let mut in_train = vec![false; n];
    for (c, m) in members.iter_mut().enumerate() {
        for &i in m.iter().take(quota[c]) {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, frame) in d.frames().iter().enumerate() {
        if in_train[i] {
            train.push(frame.clone());
        } else {
            test.push(frame.clone());
        }
    }
    Ok((d.with_frames(train)?, d.with_frames(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_corpus, SyntheticConfig};
    use std::collections::HashSet;

    fn corpus(n_pos: usize, n_neg: usize, seed: u64) -> Dataset {
        generate_synthetic_corpus(&SyntheticConfig {
            n_pos,
            n_neg,
            patch_size: 8,
            noise_level: 0.1,
            seed,
            ..SyntheticConfig::default()
        })
        .unwrap()
        .dataset
    }

    fn ids(d: &Dataset) -> Vec<String> {
        d.frames().iter().map(|f| f.frame_id.clone()).collect()
    }

    #[test]
    fn full_fraction_returns_every_frame() {
        let d = corpus(6, 7, 1);
        let s = sparse_random_sample(&d, 1.0, 9).unwrap();
        assert_eq!(ids(&s), ids(&d));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = corpus(5, 5, 2);
        let a = sparse_random_sample(&d, 0.5, 42).unwrap();
        let b = sparse_random_sample(&d, 0.5, 42).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn sampling_rejects_bad_fraction_and_empty_input() {
        let d = corpus(2, 2, 3);
        assert!(sparse_random_sample(&d, 0.0, 1).is_err());
        assert!(sparse_random_sample(&d, 1.5, 1).is_err());
        assert!(matches!(
            sparse_random_sample(&Dataset::empty(), 0.5, 1),
            Err(DatasetError::Empty)
        ));
    }

    #[test]
    fn oracle_returns_stored_label() {
        let d = corpus(3, 3, 4);
        for f in d.frames() {
            assert_eq!(oracle_label(&f.frame_id, &d).unwrap(), f.label);
        }
        assert!(matches!(
            oracle_label("missing", &d),
            Err(DatasetError::UnknownFrame(_))
        ));
    }

    #[test]
    fn half_split_is_disjoint_cover() {
        let d = corpus(3, 7, 5);
        let (a, b) = partition(&d, SplitRatios::new(0.5, 0.5).unwrap(), 11).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(b.len(), 5);
        let sa: HashSet<_> = ids(&a).into_iter().collect();
        let sb: HashSet<_> = ids(&b).into_iter().collect();
        assert!(sa.is_disjoint(&sb));
        let all: HashSet<_> = ids(&d).into_iter().collect();
        assert_eq!(&sa | &sb, all);
    }

    #[test]
    fn degenerate_split_keeps_everything_in_train() {
        let d = corpus(4, 4, 6);
        let (a, b) = partition(&d, SplitRatios::new(1.0, 0.0).unwrap(), 1).unwrap();
        assert_eq!(a, d);
        assert!(b.is_empty());
    }

    #[test]
    fn ratio_violations_are_rejected() {
        assert!(SplitRatios::new(0.6, 0.6).is_err());
        assert!(SplitRatios::new(0.0, 1.0).is_err());
        assert!(SplitRatios::new(1.2, -0.2).is_err());
    }
}
