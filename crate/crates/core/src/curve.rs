//! Per-rank score curves and rank selection.

use crate::error::{Error, Result};
use crate::holdout::HoldoutPlan;
use serde::Serialize;
use serde_json::{Map, Value};

/// Provenance carried alongside a curve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CurveMetadata {
    /// `bcv-svd`, `bcv-nmf`, `bic1`, `bic2`, `bic3` or `ek`.
    pub method: String,
    /// Residual mode (`I`, `II`, `simple`, `conforming`) where one applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<HoldoutPlan>,
    /// Free-form caller parameters echoed into reports.
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

impl CurveMetadata {
    pub fn new(method: &str) -> Self {
        CurveMetadata { method: method.to_string(), ..Default::default() }
    }
}

/// Scores for a list of candidate ranks with the selected minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct BcvCurve {
    pub ranks: Vec<usize>,
    pub scores: Vec<f64>,
    pub selected_rank: usize,
    /// Per-fold scores, `per_fold[fold][rank index]`, in fold order.
    pub per_fold: Option<Vec<Vec<f64>>>,
    pub metadata: CurveMetadata,
    /// Set when the minimum sits at the largest candidate rank.
    pub boundary_warning: bool,
    /// Set when some rank fits the data exactly (BIC scores `-inf`).
    pub exact_fit: bool,
    pub warnings: Vec<String>,
}

/// Smallest rank attaining the minimum score, and whether that rank is the
/// largest candidate (a sign the range may be too short).
pub fn select_rank(ranks: &[usize], scores: &[f64]) -> Result<(usize, bool)> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("empty rank list".into()));
    }
    if ranks.len() != scores.len() {
        return Err(Error::Dimension(format!(
            "{} ranks but {} scores",
            ranks.len(),
            scores.len()
        )));
    }
    let key = |s: f64| if s.is_nan() { f64::INFINITY } else { s };
    let mut best = 0;
    for i in 1..ranks.len() {
        let (si, sb) = (key(scores[i]), key(scores[best]));
        if si < sb || (si == sb && ranks[i] < ranks[best]) {
            best = i;
        }
    }
    let max_rank = *ranks.iter().max().expect("nonempty");
    let k = ranks[best];
    Ok((k, ranks.len() > 1 && k == max_rank))
}

impl BcvCurve {
    pub fn new(ranks: Vec<usize>, scores: Vec<f64>, metadata: CurveMetadata) -> Result<Self> {
        let (selected_rank, boundary_warning) = select_rank(&ranks, &scores)?;
        let exact_fit = scores.contains(&f64::NEG_INFINITY);
        Ok(BcvCurve {
            ranks,
            scores,
            selected_rank,
            per_fold: None,
            metadata,
            boundary_warning,
            exact_fit,
            warnings: Vec::new(),
        })
    }

    /// Re-derives the selection from the stored scores.
    pub fn select_rank(&self) -> usize {
        self.selected_rank
    }

    pub fn score_at(&self, k: usize) -> Option<f64> {
        self.ranks.iter().position(|&r| r == k).map(|i| self.scores[i])
    }

    pub fn min_score(&self) -> f64 {
        self.scores.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// JSON object `{"method", "mode", "ranks", "scores", "selected", "plan", ...}`.
    /// Non-finite scores are written as `null`.
    pub fn to_json_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("method".into(), Value::from(self.metadata.method.clone()));
        if let Some(mode) = &self.metadata.mode {
            obj.insert("mode".into(), Value::from(mode.clone()));
        }
        obj.insert("ranks".into(), Value::from(self.ranks.clone()));
        obj.insert(
            "scores".into(),
            Value::Array(
                self.scores
                    .iter()
                    .map(|&s| serde_json::Number::from_f64(s).map(Value::Number).unwrap_or(Value::Null))
                    .collect(),
            ),
        );
        obj.insert("selected".into(), Value::from(self.selected_rank));
        if let Some(seed) = self.metadata.seed {
            obj.insert("seed".into(), Value::from(seed));
        }
        if let Some(plan) = &self.metadata.plan {
            obj.insert("plan".into(), serde_json::to_value(plan).expect("plan serializes"));
        }
        obj.insert("boundary_warning".into(), Value::from(self.boundary_warning));
        if self.exact_fit {
            obj.insert("exact_fit".into(), Value::from(true));
        }
        if !self.warnings.is_empty() {
            obj.insert("warnings".into(), Value::from(self.warnings.clone()));
        }
        if !self.metadata.params.is_empty() {
            obj.insert("metadata".into(), Value::Object(self.metadata.params.clone()));
        }
        Value::Object(obj)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("curve serializes")
    }

    /// Tab-separated `rank<TAB>score` lines under a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tscore\n");
        for (k, s) in self.ranks.iter().zip(&self.scores) {
            out.push_str(&format!("{}\t{}\n", k, s));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_rules() {
        assert_eq!(select_rank(&[0, 1, 2], &[5.0, 1.0, 2.0]).unwrap(), (1, false));
        assert_eq!(select_rank(&[0, 1, 2], &[3.0, 3.0, 4.0]).unwrap(), (0, false));
        let ranks: Vec<usize> = (0..=20).collect();
        let scores: Vec<f64> = ranks.iter().map(|&k| 100.0 - k as f64).collect();
        assert_eq!(select_rank(&ranks, &scores).unwrap(), (20, true));
        assert!(select_rank(&[], &[]).is_err());
    }

    #[test]
    fn tie_prefers_smallest_rank_regardless_of_order() {
        assert_eq!(select_rank(&[3, 1, 2], &[1.0, 1.0, 2.0]).unwrap().0, 1);
    }

    #[test]
    fn json_and_tsv_shapes() {
        let mut md = CurveMetadata::new("bcv-svd");
        md.mode = Some("I".into());
        let c = BcvCurve::new(vec![0, 1], vec![2.0, 1.5], md).unwrap();
        let v = c.to_json_value();
        assert_eq!(v["method"], "bcv-svd");
        assert_eq!(v["mode"], "I");
        assert_eq!(v["selected"], 1);
        assert_eq!(c.to_tsv(), "rank\tscore\n0\t2\n1\t1.5\n");
        let bic = BcvCurve::new(vec![0, 1], vec![1.0, f64::NEG_INFINITY], CurveMetadata::new("bic1")).unwrap();
        assert!(bic.exact_fit);
        assert_eq!(bic.selected_rank, 1);
        assert!(bic.to_json_value()["scores"][1].is_null());
    }
}
