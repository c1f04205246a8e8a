use crate::dataset::ClassLabel;

use super::BoostError;

/// Unit step with `H(0) = 1`.
#[inline]
pub fn heaviside(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Regression stump `h(f) = a * H(f[d] - tau) + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub d: usize,
}

impl Stump {
    #[inline]
    pub fn eval(&self, f_d: f64) -> f64 {
        eval_stump(self, f_d)
    }
}

#[inline]
pub fn eval_stump(s: &Stump, f_d: f64) -> f64 {
    s.a * heaviside(f_d - s.tau) + s.b
}

/// `sign` with `sign(0) = +1`, as used for every hard decision in the crate.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Best stump for one feature dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit {
    pub stump: Stump,
    /// Weighted misclassification rate of `sign(h)`.
    pub weighted_error: f64,
    /// Weighted mean squared error `sum w (y - h)^2 / sum w`.
    pub objective: f64,
}

/// Weighted least-squares stump over samples pre-sorted by `order`.
///
/// Candidate thresholds are evaluated in the order `+inf`, `-inf`, then the
/// midpoints between consecutive distinct values ascending; the first
/// candidate attaining the minimum objective wins.
pub(crate) fn fit_sorted(
    values: &[f64],
    order: &[u32],
    ys: &[f64],
    weights: &[f64],
    d: usize,
) -> StumpFit {
    let mut w_total = 0.0;
    let mut s_total = 0.0;
    let mut q_total = 0.0;
    for &i in order {
        let i = i as usize;
        w_total += weights[i];
        s_total += weights[i] * ys[i];
        q_total += weights[i] * ys[i] * ys[i];
    }
    let mean = s_total / w_total;

    // +inf: every sample below the threshold, constant b
    let mut best_sse = q_total - s_total * s_total / w_total;
    let mut best = Stump {
        a: 0.0,
        b: mean,
        tau: f64::INFINITY,
        d,
    };
    // -inf: every sample above the threshold, constant a + b with b = 0
    let sse_neg_inf = q_total - s_total * s_total / w_total;
    if sse_neg_inf < best_sse {
        best_sse = sse_neg_inf;
        best = Stump {
            a: mean,
            b: 0.0,
            tau: f64::NEG_INFINITY,
            d,
        };
    }

    let mut w_below = 0.0;
    let mut s_below = 0.0;
    for k in 0..order.len().saturating_sub(1) {
        let i = order[k] as usize;
        w_below += weights[i];
        s_below += weights[i] * ys[i];
        let (lo, hi) = (values[i], values[order[k + 1] as usize]);
        if lo >= hi {
            continue;
        }
        let w_above = w_total - w_below;
        let s_above = s_total - s_below;
        let sse = q_total - s_below * s_below / w_below - s_above * s_above / w_above;
        if sse < best_sse {
            let mut tau = lo + (hi - lo) / 2.0;
            if tau <= lo {
                tau = hi;
            }
            let b = s_below / w_below;
            best_sse = sse;
            best = Stump {
                a: s_above / w_above - b,
                b,
                tau,
                d,
            };
        }
    }

    let mut wrong = 0.0;
    for &i in order {
        let i = i as usize;
        if sign(best.eval(values[i])) != ys[i] {
            wrong += weights[i];
        }
    }
    StumpFit {
        stump: best,
        weighted_error: wrong / w_total,
        objective: best_sse.max(0.0) / w_total,
    }
}

pub(crate) fn sorted_order(values: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_by(|&x, &y| values[x as usize].total_cmp(&values[y as usize]).then(x.cmp(&y)));
    order
}

/// Fits the weighted least-squares stump on one dimension's raw values.
/// Returns the stump and its weighted misclassification rate.
pub fn fit_stump_dimension(
    values: &[f64],
    labels: &[ClassLabel],
    weights: &[f64],
    d: usize,
) -> Result<(Stump, f64), BoostError> {
    Ok(fit_stump_dimension_detailed(values, labels, weights, d)?.into_pair())
}

pub fn fit_stump_dimension_detailed(
    values: &[f64],
    labels: &[ClassLabel],
    weights: &[f64],
    d: usize,
) -> Result<StumpFit, BoostError> {
    if values.len() != labels.len() || values.len() != weights.len() {
        return Err(BoostError::InvalidInput(format!(
            "length mismatch: {} values, {} labels, {} weights",
            values.len(),
            labels.len(),
            weights.len()
        )));
    }
    if values.len() < 2 {
        return Err(BoostError::InvalidInput(
            "need at least two samples".to_string(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BoostError::InvalidInput("non-finite feature value".to_string()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(BoostError::InvalidInput(
            "weights must be finite and positive".to_string(),
        ));
    }
    let ys: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let order = sorted_order(values);
    Ok(fit_sorted(values, &order, &ys, weights, d))
}

impl StumpFit {
    pub fn into_pair(self) -> (Stump, f64) {
        (self.stump, self.weighted_error)
    }
}
