use std::fmt::Write as _;

use crate::dataset::ClassLabel;

use super::PresenceError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// ROC points ordered by descending threshold, a score counting as positive
/// when `score >= threshold`. Default thresholds are `+inf`, every distinct
/// score, and `-inf`, so the curve always includes (0, 0) and (1, 1).
pub fn roc_curve(
    raw_scores: &[f64],
    labels: &[ClassLabel],
    thresholds: Option<&[f64]>,
) -> Result<Vec<RocPoint>, PresenceError> {
    if raw_scores.len() != labels.len() {
        return Err(PresenceError::LengthMismatch {
            scores: raw_scores.len(),
            labels: labels.len(),
        });
    }
    if raw_scores.iter().any(|s| s.is_nan()) {
        return Err(PresenceError::InvalidParam("NaN score".to_string()));
    }
    let positives = labels.iter().filter(|l| l.is_vehicle()).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(PresenceError::SingleClass { positives, negatives });
    }

    let mut order: Vec<usize> = (0..raw_scores.len()).collect();
    order.sort_by(|&a, &b| raw_scores[b].total_cmp(&raw_scores[a]));
    let mut thetas: Vec<f64> = match thresholds {
        Some(t) => t.to_vec(),
        None => {
            let mut t = vec![f64::INFINITY, f64::NEG_INFINITY];
            t.extend_from_slice(raw_scores);
            t
        }
    };
    if thetas.iter().any(|t| t.is_nan()) {
        return Err(PresenceError::InvalidParam("NaN threshold".to_string()));
    }
    thetas.sort_by(|a, b| b.total_cmp(a));
    thetas.dedup();

    let mut points = Vec::with_capacity(thetas.len());
    let (mut k, mut tp, mut fp) = (0usize, 0usize, 0usize);
    for theta in thetas {
        while k < order.len() && raw_scores[order[k]] >= theta {
            if labels[order[k]].is_vehicle() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            threshold: theta,
            tpr: tp as f64 / positives as f64,
            fpr: fp as f64 / negatives as f64,
        });
    }
    Ok(points)
}

/// `threshold<TAB>tpr<TAB>fpr` rows.
pub fn roc_table(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold\ttpr\tfpr\n");
    for p in points {
        writeln!(out, "{:?}\t{:?}\t{:?}", p.threshold, p.tpr, p.fpr).unwrap();
    }
    out
}
