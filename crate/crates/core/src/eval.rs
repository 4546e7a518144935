//! Exact-match precision, recall and F1.
//!
//! A predicted quad is correct only if all four label-space elements equal
//! those of a gold quad of the same sentence. Quads are compared as sets per
//! sentence (duplicates collapse) and counts are micro-aggregated over the
//! corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Quad;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("prediction and gold sentence ids differ: only in predictions {only_pred:?}, only in gold {only_gold:?}")]
pub struct AlignmentError {
    pub only_pred: Vec<String>,
    pub only_gold: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

impl EvalReport {
    pub fn from_counts(tp: usize, n_pred: usize, n_gold: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, n_pred);
        let recall = ratio(tp, n_gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            tp,
            n_pred,
            n_gold,
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "exact match, micro-averaged over sentences (set semantics)")?;
        writeln!(f, "{:<10}{:>10}", "metric", "value")?;
        writeln!(f, "{:<10}{:>10.2}", "Pre", self.precision * 100.0)?;
        writeln!(f, "{:<10}{:>10.2}", "Rec", self.recall * 100.0)?;
        writeln!(f, "{:<10}{:>10.2}", "F1", self.f1 * 100.0)?;
        writeln!(f, "{:<10}{:>10}", "tp", self.tp)?;
        writeln!(f, "{:<10}{:>10}", "#pred", self.n_pred)?;
        write!(f, "{:<10}{:>10}", "#gold", self.n_gold)
    }
}

/// Per-sentence quad lists keyed by sentence id.
pub type QuadsById = BTreeMap<String, Vec<Quad>>;

/// Score predictions against gold. Both maps must cover the same ids.
pub fn score_exact_match(pred: &QuadsById, gold: &QuadsById) -> Result<EvalReport, AlignmentError> {
    let only_pred: Vec<String> = pred.keys().filter(|k| !gold.contains_key(*k)).cloned().collect();
    let only_gold: Vec<String> = gold.keys().filter(|k| !pred.contains_key(*k)).cloned().collect();
    if !only_pred.is_empty() || !only_gold.is_empty() {
        return Err(AlignmentError { only_pred, only_gold });
    }
    let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
    for (id, p) in pred {
        let p: BTreeSet<&Quad> = p.iter().collect();
        let g: BTreeSet<&Quad> = gold[id].iter().collect();
        tp += p.intersection(&g).count();
        n_pred += p.len();
        n_gold += g.len();
    }
    Ok(EvalReport::from_counts(tp, n_pred, n_gold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polarity;

    fn q(a: &str) -> Quad {
        Quad::new(a, "service general", "NULL", Polarity::Negative)
    }

    fn map(rows: &[(&str, Vec<Quad>)]) -> QuadsById {
        rows.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn perfect_prediction() {
        let gold = map(&[("a", vec![q("x")]), ("b", vec![q("y")])]);
        let r = score_exact_match(&gold, &gold).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_overlap() {
        let pred = map(&[("a", vec![q("1"), q("2")])]);
        let gold = map(&[("a", vec![q("1"), q("3")])]);
        let r = score_exact_match(&pred, &gold).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
        assert_eq!((r.tp, r.n_pred, r.n_gold), (1, 2, 2));
    }

    #[test]
    fn empty_predictions_score_zero() {
        let pred = map(&[("a", vec![])]);
        let gold = map(&[("a", vec![q("1")])]);
        let r = score_exact_match(&pred, &gold).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn duplicates_collapse() {
        let pred = map(&[("a", vec![q("1"), q("1"), q("2")])]);
        let gold = map(&[("a", vec![q("1")])]);
        let r = score_exact_match(&pred, &gold).unwrap();
        assert_eq!((r.tp, r.n_pred, r.n_gold), (1, 2, 1));
    }

    #[test]
    fn element_mismatch_is_wrong() {
        let mut other = q("1");
        other.polarity = Polarity::Neutral;
        let r = score_exact_match(&map(&[("a", vec![other])]), &map(&[("a", vec![q("1")])])).unwrap();
        assert_eq!(r.tp, 0);
    }

    #[test]
    fn misaligned_ids() {
        let err = score_exact_match(
            &map(&[("a", vec![]), ("b", vec![])]),
            &map(&[("a", vec![]), ("c", vec![])]),
        )
        .unwrap_err();
        assert_eq!(err.only_pred, vec!["b"]);
        assert_eq!(err.only_gold, vec!["c"]);
    }

    #[test]
    fn table_mentions_micro() {
        let r = EvalReport::from_counts(1, 2, 4);
        let s = r.to_string();
        assert!(s.contains("micro"));
        assert!(s.contains("50.00"));
        assert!(s.contains("25.00"));
    }
}
