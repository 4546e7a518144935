//! Order selection: score every element order over the training set with a
//! pluggable sequence scorer, then keep the top `k`.
//!
//! An order's score is the arithmetic mean, over sentences that have quads,
//! of `scorer.score(input, target)` for that order's rendering. What the
//! scorer returns (probability, log-probability, length-normalised
//! log-likelihood) is its own declared property, see
//! [`SequenceScorer::kind`].

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{render_quad_input, render_quad_target, AugmentError, OrderTemplate};
use crate::dataset::Dataset;
use crate::model::map_quad;

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("no sentence with quads to score {0} on")]
    EmptyDataset(String),
    #[error("non-finite score {score} for order {order} on sentence {source_id:?}")]
    NonFinite {
        order: String,
        source_id: String,
        score: f64,
    },
    #[error("k = {k} is outside [1, {available}]")]
    KOutOfRange { k: usize, available: usize },
    #[error("order {0} is scored more than once")]
    DuplicateOrder(String),
    #[error("scores line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Order(#[from] AugmentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that can score a target sequence given a prompt.
pub trait SequenceScorer {
    fn score(&self, input: &str, target: &str) -> f64;

    /// Free-form description of what the returned value means; written to
    /// run metadata.
    fn kind(&self) -> &str {
        "unspecified"
    }
}

impl<F> SequenceScorer for F
where
    F: Fn(&str, &str) -> f64,
{
    fn score(&self, input: &str, target: &str) -> f64 {
        self(input, target)
    }
}

/// Hash-based pseudo scores in `[-1, 0)`, stable across runs and platforms.
/// For tests and offline demos only; the value depends on the whole input
/// (which ends with the order surface) and the target.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyScorer {
    pub salt: u64,
}

impl ToyScorer {
    fn fnv1a(&self, parts: &[&str]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.salt;
        for part in parts {
            for b in part.bytes().chain(std::iter::once(0xff)) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

impl SequenceScorer for ToyScorer {
    fn score(&self, input: &str, target: &str) -> f64 {
        let h = self.fnv1a(&[input, target]);
        -((h >> 11) as f64 / (1u64 << 53) as f64) - f64::EPSILON
    }

    fn kind(&self) -> &str {
        "toy-hash"
    }
}

/// Mean score of one order; also a row of the ranking report.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderScore {
    pub order: OrderTemplate,
    pub score: f64,
}

/// One row of the scores JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub order: String,
    pub source_id: String,
    pub score: f64,
}

/// One row of the ranking report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOrder {
    pub order: String,
    pub mean_score: f64,
    pub rank: usize,
}

/// Per-sentence scores for one order, in dataset order.
pub fn score_rows<S: SequenceScorer + ?Sized>(t: &OrderTemplate, d: &Dataset, scorer: &S) -> Vec<ScoreRow> {
    d.usable()
        .map(|e| {
            let mapped: Vec<_> = e.quads.iter().map(map_quad).collect();
            let input = render_quad_input(&e.sentence, t);
            let target = render_quad_target(&mapped, t);
            ScoreRow {
                order: t.surface(),
                source_id: e.sentence.id.clone(),
                score: scorer.score(&input, &target),
            }
        })
        .collect()
}

fn mean_of_rows<'a>(order: &OrderTemplate, rows: impl Iterator<Item = &'a ScoreRow>) -> Result<f64, OrderError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in rows {
        if !r.score.is_finite() {
            return Err(OrderError::NonFinite {
                order: order.surface(),
                source_id: r.source_id.clone(),
                score: r.score,
            });
        }
        sum += r.score;
        n += 1;
    }
    if n == 0 {
        return Err(OrderError::EmptyDataset(order.surface()));
    }
    Ok(sum / n as f64)
}

/// Average generation score of `t` across the usable sentences of `d`.
pub fn score_order<S: SequenceScorer + ?Sized>(
    t: &OrderTemplate,
    d: &Dataset,
    scorer: &S,
) -> Result<OrderScore, OrderError> {
    let rows = score_rows(t, d, scorer);
    Ok(OrderScore {
        order: *t,
        score: mean_of_rows(t, rows.iter())?,
    })
}

/// The `k` best orders by descending score; ties go to the lexicographically
/// smaller surface.
pub fn select_top_k(scores: &[OrderScore], k: usize) -> Result<Vec<OrderScore>, OrderError> {
    if k == 0 || k > scores.len() {
        return Err(OrderError::KOutOfRange {
            k,
            available: scores.len(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for s in scores {
        if !seen.insert(s.order) {
            return Err(OrderError::DuplicateOrder(s.order.surface()));
        }
    }
    let mut ranked: Vec<(String, &OrderScore)> = scores.iter().map(|s| (s.order.surface(), s)).collect();
    ranked.sort_by(|(sa, a), (sb, b)| b.score.total_cmp(&a.score).then_with(|| sa.cmp(sb)));
    Ok(ranked.into_iter().take(k).map(|(_, s)| s.clone()).collect())
}

pub fn ranking_report(selected: &[OrderScore]) -> Vec<RankedOrder> {
    selected
        .iter()
        .enumerate()
        .map(|(i, s)| RankedOrder {
            order: s.order.surface(),
            mean_score: s.score,
            rank: i + 1,
        })
        .collect()
}

pub fn read_score_rows<R: BufRead>(reader: R) -> Result<Vec<ScoreRow>, OrderError> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ScoreRow = serde_json::from_str(&line).map_err(|e| OrderError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        row.order.parse::<OrderTemplate>().map_err(|e| OrderError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_score_rows<W: Write>(rows: &[ScoreRow], mut out: W) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-order means from a scores file. Rows are summed in file order.
pub fn aggregate_score_rows(rows: &[ScoreRow]) -> Result<Vec<OrderScore>, OrderError> {
    let mut grouped: BTreeMap<OrderTemplate, Vec<&ScoreRow>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.order.parse()?).or_default().push(r);
    }
    grouped
        .into_iter()
        .map(|(order, rows)| {
            Ok(OrderScore {
                order,
                score: mean_of_rows(&order, rows.into_iter())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::enumerate_quad_orders;
    use crate::dataset::{Example, Split};
    use crate::model::{Polarity, Quad, Sentence};

    fn dataset(n: usize) -> Dataset {
        let examples = (0..n)
            .map(|i| Example {
                sentence: Sentence::new(format!("s{i}"), format!("sentence number {i}")),
                quads: vec![Quad::new("number", "misc", "NULL", Polarity::Neutral)],
            })
            .collect();
        Dataset::new("t", Split::Train, examples)
    }

    #[test]
    fn mean_of_two_scores() {
        let d = dataset(2);
        let scorer = |input: &str, _: &str| if input.contains("number 0") { 0.5 } else { 0.7 };
        let s = score_order(&OrderTemplate::canonical(), &d, &scorer).unwrap();
        assert!((s.score - 0.6).abs() < 1e-15);
    }

    #[test]
    fn constant_scorer_gives_constant() {
        let d = dataset(7);
        let s = score_order(&OrderTemplate::canonical(), &d, &|_: &str, _: &str| -1.25).unwrap();
        assert_eq!(s.score, -1.25);
    }

    #[test]
    fn empty_and_non_finite_are_errors() {
        let d = dataset(0);
        assert!(matches!(
            score_order(&OrderTemplate::canonical(), &d, &ToyScorer::default()),
            Err(OrderError::EmptyDataset(_))
        ));
        let d = dataset(3);
        let err = score_order(&OrderTemplate::canonical(), &d, &|i: &str, _: &str| {
            if i.contains("number 1") {
                f64::NAN
            } else {
                0.0
            }
        })
        .unwrap_err();
        match err {
            OrderError::NonFinite { source_id, .. } => assert_eq!(source_id, "s1"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn toy_scorer_is_stable_and_order_sensitive() {
        let d = dataset(3);
        let toy = ToyScorer::default();
        let scores: Vec<f64> = enumerate_quad_orders()
            .iter()
            .map(|t| score_order(t, &d, &toy).unwrap().score)
            .collect();
        assert!(scores.iter().all(|s| (-1.0..0.0).contains(s)));
        let mut uniq = scores.clone();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        assert_eq!(uniq.len(), 24);
        // Computed outside Rust; a change to the hash breaks saved score files.
        assert_eq!(toy.score("a", "b"), -0.8230505887355265);
        assert_ne!(toy.score("a", "b"), toy.score("ab", ""));
    }

    #[test]
    fn top_k_ranking_and_ties() {
        let orders = enumerate_quad_orders();
        let scores: Vec<OrderScore> = orders
            .iter()
            .enumerate()
            .map(|(i, &order)| OrderScore {
                order,
                score: -(i as f64),
            })
            .collect();
        let top = select_top_k(&scores, 15).unwrap();
        assert_eq!(top.len(), 15);
        assert_eq!(top[0].order, orders[0]);
        assert_eq!(select_top_k(&scores, 24).unwrap().len(), 24);

        let ties: Vec<OrderScore> = orders
            .iter()
            .rev()
            .map(|&order| OrderScore { order, score: 1.0 })
            .collect();
        let top3: Vec<String> = select_top_k(&ties, 3)
            .unwrap()
            .iter()
            .map(|s| s.order.surface())
            .collect();
        assert_eq!(top3, ["[A][C][O][S]", "[A][C][S][O]", "[A][O][C][S]"]);

        assert!(matches!(select_top_k(&scores, 0), Err(OrderError::KOutOfRange { .. })));
        assert!(matches!(select_top_k(&scores, 25), Err(OrderError::KOutOfRange { .. })));
        let dup = vec![scores[0].clone(), scores[0].clone()];
        assert!(matches!(select_top_k(&dup, 1), Err(OrderError::DuplicateOrder(_))));
    }

    #[test]
    fn rows_round_trip_and_aggregate() {
        let d = dataset(4);
        let toy = ToyScorer::default();
        let rows: Vec<ScoreRow> = enumerate_quad_orders()
            .iter()
            .flat_map(|t| score_rows(t, &d, &toy))
            .collect();
        assert_eq!(rows.len(), 96);
        let mut buf = Vec::new();
        write_score_rows(&rows, &mut buf).unwrap();
        let back = read_score_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let agg = aggregate_score_rows(&back).unwrap();
        for s in &agg {
            assert_eq!(s.score, score_order(&s.order, &d, &toy).unwrap().score);
        }
        assert!(read_score_rows("{\"order\":\"[A]\",\"source_id\":\"x\",\"score\":1}".as_bytes()).is_err());
    }
}
