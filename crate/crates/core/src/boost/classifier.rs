use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::ClassLabel;
use crate::haar::{FeatureVector, IndexVersion};

use super::stump::{eval_stump, Stump};
use super::BoostError;

const HEADER: &str = "roadboost-classifier v1";

/// Additive ensemble of stumps with a decision threshold on its raw score.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongClassifier {
    pub stumps: Vec<Stump>,
    pub decision_threshold: f64,
    pub feature_index_version: IndexVersion,
}

impl StrongClassifier {
    pub fn n_c(&self) -> usize {
        self.stumps.len()
    }

    /// Raw score from feature values indexed by dimension, no version check.
    pub fn score_values(&self, values: &[f64]) -> f64 {
        self.stumps.iter().map(|s| eval_stump(s, values[s.d])).sum()
    }

    /// Raw score from values listed in `dimensions()` order.
    pub fn score_sparse(&self, sparse: &[f64]) -> f64 {
        self.stumps
            .iter()
            .zip(sparse)
            .map(|(s, &v)| eval_stump(s, v))
            .sum()
    }

    /// Feature dimension used by each stump, in stump order.
    pub fn dimensions(&self) -> Vec<usize> {
        self.stumps.iter().map(|s| s.d).collect()
    }

    pub fn decide(&self, raw: f64) -> ClassLabel {
        if raw - self.decision_threshold >= 0.0 {
            ClassLabel::Vehicle
        } else {
            ClassLabel::NonVehicle
        }
    }

    pub fn with_threshold(&self, decision_threshold: f64) -> Self {
        Self {
            decision_threshold,
            ..self.clone()
        }
    }

    /// Text form: a header block then one `d a b tau` line per stump, with
    /// floats in shortest round-trip notation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{HEADER}").unwrap();
        writeln!(out, "feature_index_version {}", self.feature_index_version).unwrap();
        writeln!(out, "decision_threshold {:?}", self.decision_threshold).unwrap();
        writeln!(out, "n_c {}", self.stumps.len()).unwrap();
        for s in &self.stumps {
            writeln!(out, "{} {:?} {:?} {:?}", s.d, s.a, s.b, s.tau).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, BoostError> {
        let bad = |line: usize, msg: String| BoostError::Format { line, message: msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| BoostError::Format {
                    line: 0,
                    message: format!("missing {what}"),
                })
        };
        let (n, header) = next("header")?;
        if header != HEADER {
            return Err(bad(n, format!("expected {HEADER:?}, got {header:?}")));
        }
        let mut field = |key: &str| -> Result<(usize, String), BoostError> {
            let (n, line) = next(key)?;
            let value = line
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| bad(n, format!("expected `{key} <value>`")))?;
            Ok((n, value.to_string()))
        };
        let (n, v) = field("feature_index_version")?;
        let feature_index_version = v.parse().map_err(|e| bad(n, e))?;
        let (n, v) = field("decision_threshold")?;
        let decision_threshold: f64 = v
            .parse()
            .map_err(|_| bad(n, format!("bad threshold {v:?}")))?;
        let (n, v) = field("n_c")?;
        let n_c: usize = v.parse().map_err(|_| bad(n, format!("bad n_c {v:?}")))?;
        let mut stumps = Vec::with_capacity(n_c);
        for _ in 0..n_c {
            let (n, line) = next("stump")?;
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 4 {
                return Err(bad(n, "stump line needs `d a b tau`".to_string()));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, format!("bad number {s:?}")));
            stumps.push(Stump {
                d: parts[0]
                    .parse()
                    .map_err(|_| bad(n, format!("bad dimension {:?}", parts[0])))?,
                a: num(parts[1])?,
                b: num(parts[2])?,
                tau: num(parts[3])?,
            });
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(bad(n, format!("unexpected trailing line {extra:?}")));
        }
        Ok(Self {
            stumps,
            decision_threshold,
            feature_index_version,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), BoostError> {
        std::fs::write(path, self.to_text()).map_err(BoostError::Io)
    }

    pub fn load(path: &Path) -> Result<Self, BoostError> {
        Self::from_text(&std::fs::read_to_string(path).map_err(BoostError::Io)?)
    }

    fn check(&self, f: &FeatureVector) -> Result<(), BoostError> {
        if f.index_version != self.feature_index_version {
            return Err(BoostError::VersionMismatch {
                classifier: self.feature_index_version,
                features: f.index_version,
            });
        }
        if let Some(s) = self.stumps.iter().find(|s| s.d >= f.values.len()) {
            return Err(BoostError::InvalidInput(format!(
                "stump dimension {} outside feature vector of length {}",
                s.d,
                f.values.len()
            )));
        }
        Ok(())
    }
}

/// Sum of stump outputs on the feature vector.
pub fn eval_strong_raw(c: &StrongClassifier, f: &FeatureVector) -> Result<f64, BoostError> {
    c.check(f)?;
    Ok(c.score_values(&f.values))
}

/// `+1` iff the raw score minus the decision threshold is non-negative.
pub fn classify(c: &StrongClassifier, f: &FeatureVector) -> Result<ClassLabel, BoostError> {
    Ok(c.decide(eval_strong_raw(c, f)?))
}
