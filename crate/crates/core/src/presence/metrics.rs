use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use super::modes::PresenceStream;
use super::PresenceError;

/// Frame-level confusion counts. A false positive is a call with no vehicle
/// ("stuck on"), a false negative a missed vehicle ("dropped call").
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Counts one frame.
    pub fn record(&mut self, detected: bool, truth: bool) {
        match (truth, detected) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_frames(detected: &[bool], truth: &[bool]) -> Self {
        let mut cm = Self::default();
        for (&d, &t) in detected.iter().zip(truth) {
            cm.record(d, t);
        }
        cm
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fn_: self.fn_ + o.fn_,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

pub fn confusion(detected: &PresenceStream, truth: &PresenceStream) -> Result<ConfusionMatrix, PresenceError> {
    if detected.zone_id != truth.zone_id {
        return Err(PresenceError::StreamMismatch(format!(
            "zone {} vs {}",
            detected.zone_id, truth.zone_id
        )));
    }
    if detected.frame_rate != truth.frame_rate {
        return Err(PresenceError::StreamMismatch(format!(
            "frame rate {} vs {}",
            detected.frame_rate, truth.frame_rate
        )));
    }
    if detected.len() != truth.len() {
        return Err(PresenceError::StreamMismatch(format!(
            "{} vs {} frames",
            detected.len(),
            truth.len()
        )));
    }
    Ok(ConfusionMatrix::from_frames(&detected.states, &truth.states))
}

/// `(tp + tn) / total`.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64, PresenceError> {
    match cm.total() {
        0 => Err(PresenceError::EmptyMatrix),
        n => Ok((cm.tp + cm.tn) as f64 / n as f64),
    }
}

/// Empirical distribution of per-video accuracies with nearest-rank quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Percentiles {
    sorted: Vec<f64>,
}

impl Percentiles {
    /// Value at rank `ceil(q * n)` (1-based, clamped to `[1, n]`).
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[rank - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn p05(&self) -> f64 {
        self.quantile(0.05)
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Empirical CDF rows `fraction<TAB>accuracy`, one per video.
    pub fn to_table(&self) -> String {
        let n = self.sorted.len();
        let mut out = String::from("fraction\taccuracy\n");
        for (i, a) in self.sorted.iter().enumerate() {
            writeln!(out, "{:?}\t{:?}", (i + 1) as f64 / n as f64, a).unwrap();
        }
        out
    }
}

pub fn accuracy_percentiles(per_video: &[f64]) -> Result<Percentiles, PresenceError> {
    if per_video.is_empty() {
        return Err(PresenceError::EmptyInput);
    }
    if per_video.iter().any(|a| !a.is_finite()) {
        return Err(PresenceError::InvalidParam("non-finite accuracy".to_string()));
    }
    let mut sorted = per_video.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Percentiles { sorted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(states: Vec<bool>) -> PresenceStream {
        PresenceStream::new("z0", 15.0, states).unwrap()
    }

    #[test]
    fn identical_streams_have_no_errors() {
        let s = ps(vec![true, false, true, true]);
        let cm = confusion(&s, &s).unwrap();
        assert_eq!((cm.fn_, cm.fp), (0, 0));
        assert_eq!(overall_accuracy(&cm).unwrap(), 1.0);
    }

    #[test]
    fn always_on_detector_over_empty_road() {
        let cm = confusion(&ps(vec![true; 10]), &ps(vec![false; 10])).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 0, fn_: 0, fp: 10, tn: 0 });
    }

    #[test]
    fn mismatched_streams_are_rejected() {
        let a = ps(vec![true; 3]);
        assert!(confusion(&a, &ps(vec![true; 4])).is_err());
        let b = PresenceStream::new("z1", 15.0, vec![true; 3]).unwrap();
        assert!(confusion(&a, &b).is_err());
        let c = PresenceStream::new("z0", 30.0, vec![true; 3]).unwrap();
        assert!(confusion(&a, &c).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let acc = |tp, fn_, fp, tn| overall_accuracy(&ConfusionMatrix { tp, fn_, fp, tn }).unwrap();
        assert_eq!(acc(1, 0, 0, 1), 1.0);
        assert_eq!(acc(1, 1, 1, 1), 0.5);
        assert_eq!(acc(95, 3, 2, 0), 0.95);
        assert_eq!(overall_accuracy(&ConfusionMatrix::default()), Err(PresenceError::EmptyMatrix));
    }

    #[test]
    fn percentile_examples() {
        let p = accuracy_percentiles(&[0.9]).unwrap();
        assert_eq!((p.median(), p.p05()), (0.9, 0.9));
        let p = accuracy_percentiles(&[1.0, 0.6, 0.8, 0.5, 0.9, 0.7]).unwrap();
        assert_eq!(p.median(), 0.7);
        assert_eq!(p.p05(), 0.5);
        assert_eq!(p.quantile(1.0), 1.0);
        assert_eq!(accuracy_percentiles(&[]), Err(PresenceError::EmptyInput));
    }
}
