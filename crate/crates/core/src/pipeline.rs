//! File-level steps behind the `star` subcommands. Steps talk to each other
//! only through the JSONL/JSON files defined in the individual modules.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::augment::{enumerate_quad_orders, render_quad_input, render_quad_target, OrderTemplate};
use crate::dataset::{self, Dataset, ElementOrder, Split, Taxonomy};
use crate::decode::{
    constrained_generate, validate_sequence, DecodingSchema, GenerationConfig, GoldProvider, PredictionRow,
    RandomProvider, Violation,
};
use crate::error::{Error, Result};
use crate::eval::QuadsById;
use crate::infer::{parse_target, OrderView, VoteError, VoteTally};
use crate::model::{map_quad, Quad};
use crate::order::RankedOrder;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Read one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Jsonl {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

pub fn load_raw(
    path: &Path,
    name: Option<&str>,
    split: Split,
    order: ElementOrder,
    taxonomy: Option<&Taxonomy>,
) -> Result<Dataset> {
    let name = name.map(str::to_string).unwrap_or_else(|| stem(path));
    Ok(dataset::parse_raw(open(path)?, &name, split, order, taxonomy)?)
}

pub fn load_canonical(path: &Path) -> Result<Dataset> {
    Ok(dataset::read_canonical(open(path)?, &stem(path), Split::Train)?)
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Taxonomy::from_lines(&text))
}

/// Taxonomy file if given, else categories observed in `train`, else in
/// `fallback`.
pub fn resolve_taxonomy(taxonomy: Option<&Path>, train: Option<&Path>, fallback: &Dataset) -> Result<Taxonomy> {
    match (taxonomy, train) {
        (Some(t), _) => load_taxonomy(t),
        (None, Some(train)) => Ok(load_canonical(train)?.categories()),
        (None, None) => {
            log::warn!(
                "no taxonomy or training split given; using categories of {}",
                fallback.name
            );
            Ok(fallback.categories())
        }
    }
}

/// The first `k` orders of a ranking report, or the first `k` orders in
/// enumeration order when no report is given.
pub fn load_orders(ranking: Option<&Path>, k: usize) -> Result<Vec<OrderTemplate>> {
    let orders: Vec<OrderTemplate> = match ranking {
        Some(path) => {
            let rows: Vec<RankedOrder> = serde_json::from_reader(open(path)?).map_err(|e| Error::Jsonl {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
            let mut rows = rows;
            rows.sort_by_key(|r| r.rank);
            rows.iter()
                .map(|r| r.order.parse())
                .collect::<std::result::Result<_, _>>()?
        }
        None => {
            log::warn!("no order ranking given; using the first {k} orders in enumeration order");
            enumerate_quad_orders()
        }
    };
    if orders.len() < k {
        return Err(Error::Config(format!("need {k} orders, ranking has {}", orders.len())));
    }
    Ok(orders.into_iter().take(k).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    /// Proposes the rendered gold target of each (sentence, order).
    Gold,
    /// Uniform random scores over the schema vocabulary plus junk.
    Random,
}

/// Decode every (sentence, order) pair. Output is ordered by sentence then
/// order regardless of thread count; random providers are seeded per pair.
pub fn decode_dataset(
    data: &Dataset,
    orders: &[OrderTemplate],
    schema: &DecodingSchema,
    provider: ProviderKind,
    seed: u64,
    config: GenerationConfig,
) -> Result<Vec<PredictionRow>> {
    let jobs: Vec<(usize, usize)> = (0..data.examples.len())
        .flat_map(|i| (0..orders.len()).map(move |j| (i, j)))
        .collect();
    let rows: Vec<Result<PredictionRow>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let ex = &data.examples[i];
            let order = orders[j];
            let schema = schema.with_order(order);
            let input = render_quad_input(&ex.sentence, &order);
            let generation = match provider {
                ProviderKind::Gold => {
                    let mut gold = GoldProvider::new();
                    if !ex.quads.is_empty() {
                        let mapped: Vec<_> = ex.quads.iter().map(map_quad).collect();
                        gold.insert(input.clone(), &render_quad_target(&mapped, &order));
                    }
                    constrained_generate(&input, &ex.sentence, &schema, &mut gold, config)?
                }
                ProviderKind::Random => {
                    let pair_seed = seed ^ ((i as u64) << 20) ^ (j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                    let mut p = RandomProvider::new(pair_seed, RandomProvider::schema_vocab(&schema, &ex.sentence));
                    constrained_generate(&input, &ex.sentence, &schema, &mut p, config)?
                }
            };
            if generation.truncated {
                log::warn!(
                    "{} {}: step cap reached, sequence completed by fallback",
                    ex.sentence.id,
                    order
                );
            }
            Ok(PredictionRow {
                source_id: ex.sentence.id.clone(),
                order: order.surface(),
                sequence: generation.sequence,
            })
        })
        .collect();
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowVerdict {
    pub source_id: String,
    pub order: String,
    pub violation: Option<Violation>,
}

/// Validate prediction rows against the sentences in `data`.
pub fn validate_predictions(
    rows: &[PredictionRow],
    data: &Dataset,
    schema: &DecodingSchema,
) -> Result<Vec<RowVerdict>> {
    let sentences: BTreeMap<&str, _> = data
        .examples
        .iter()
        .map(|e| (e.sentence.id.as_str(), &e.sentence))
        .collect();
    rows.par_iter()
        .map(|r| {
            let sentence = sentences
                .get(r.source_id.as_str())
                .ok_or_else(|| Error::Config(format!("prediction for unknown sentence {:?}", r.source_id)))?;
            let order: OrderTemplate = r.order.parse()?;
            Ok(RowVerdict {
                source_id: r.source_id.clone(),
                order: r.order.clone(),
                violation: validate_sequence(&r.sequence, sentence, &schema.with_order(order)).err(),
            })
        })
        .collect()
}

/// One row of the final predictions JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalPrediction {
    pub source_id: String,
    pub quads: Vec<Quad>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoteSummary {
    pub sentences: usize,
    pub quads: usize,
    /// Segments dropped while parsing.
    pub malformed_segments: usize,
}

/// Group rows by sentence (first-appearance order), parse each view and
/// keep quads with at least `tau` of `k` votes.
pub fn vote_predictions(rows: &[PredictionRow], k: usize, tau: f64) -> Result<(Vec<FinalPrediction>, VoteSummary)> {
    let mut groups: Vec<(String, Vec<OrderView>)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut summary = VoteSummary::default();
    for r in rows {
        let order: OrderTemplate = r.order.parse()?;
        let parsed = parse_target(&r.sequence, &order);
        for d in &parsed.diagnostics {
            log::debug!("{} {}: {}", r.source_id, r.order, d);
        }
        summary.malformed_segments += parsed.diagnostics.len();
        let slot = *index.entry(r.source_id.clone()).or_insert_with(|| {
            groups.push((r.source_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(OrderView::new(order, parsed.quads));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (source_id, views) in groups {
        let mut seen = HashSet::new();
        if let Some(dup) = views.iter().find(|v| !seen.insert(v.order)) {
            return Err(Error::Config(format!(
                "sentence {source_id:?} has two rows for order {}",
                dup.order
            )));
        }
        if views.len() > k {
            return Err(VoteError::TooManyViews {
                source_id,
                got: views.len(),
                k,
            }
            .into());
        }
        let quads: Vec<Quad> = VoteTally::with_k(&views, k, tau)?.accepted().into_iter().collect();
        summary.quads += quads.len();
        out.push(FinalPrediction { source_id, quads });
    }
    summary.sentences = out.len();
    Ok((out, summary))
}

pub fn predictions_by_id(rows: Vec<FinalPrediction>) -> Result<QuadsById> {
    let mut map = QuadsById::new();
    for r in rows {
        if map.insert(r.source_id.clone(), r.quads).is_some() {
            return Err(Error::Config(format!("duplicate prediction row for {:?}", r.source_id)));
        }
    }
    Ok(map)
}

pub fn gold_by_id(d: &Dataset) -> QuadsById {
    d.examples
        .iter()
        .map(|e| (e.sentence.id.clone(), e.quads.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Example;
    use crate::eval::score_exact_match;
    use crate::model::{Polarity, Sentence};

    fn data() -> Dataset {
        Dataset::new(
            "t",
            Split::Test,
            vec![
                Example {
                    sentence: Sentence::new("a", "The pizza is delicious ."),
                    quads: vec![Quad::new("pizza", "food quality", "delicious", Polarity::Positive)],
                },
                Example {
                    sentence: Sentence::new("b", "Service was slow but the wine was fine"),
                    quads: vec![
                        Quad::new("Service", "service general", "slow", Polarity::Negative),
                        Quad::new("wine", "drinks quality", "fine", Polarity::Neutral),
                    ],
                },
                Example {
                    sentence: Sentence::new("c", "Nothing to say ."),
                    quads: vec![],
                },
            ],
        )
    }

    #[test]
    fn gold_decode_vote_eval_is_perfect() {
        let d = data();
        let orders = &enumerate_quad_orders()[..5];
        let schema = DecodingSchema::new(d.categories(), OrderTemplate::canonical()).unwrap();
        let rows = decode_dataset(&d, orders, &schema, ProviderKind::Gold, 0, GenerationConfig::default()).unwrap();
        assert_eq!(rows.len(), 15);
        assert!(validate_predictions(&rows, &d, &schema)
            .unwrap()
            .iter()
            .all(|v| v.violation.is_none()));
        let (finals, summary) = vote_predictions(&rows, 5, 2.5).unwrap();
        assert_eq!(summary.sentences, 3);
        // The 0-quad sentence decodes to a forced placeholder quad that the
        // gold provider never proposed.
        let report = score_exact_match(&predictions_by_id(finals).unwrap(), &gold_by_id(&d)).unwrap();
        assert_eq!(report.recall, 1.0);
    }

    #[test]
    fn random_decode_is_deterministic_and_valid() {
        let d = data();
        let orders = &enumerate_quad_orders()[..3];
        let schema = DecodingSchema::new(d.categories(), OrderTemplate::canonical()).unwrap();
        let a = decode_dataset(
            &d,
            orders,
            &schema,
            ProviderKind::Random,
            9,
            GenerationConfig::default(),
        )
        .unwrap();
        let b = decode_dataset(
            &d,
            orders,
            &schema,
            ProviderKind::Random,
            9,
            GenerationConfig::default(),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(validate_predictions(&a, &d, &schema)
            .unwrap()
            .iter()
            .all(|v| v.violation.is_none()));
    }

    #[test]
    fn vote_rejects_duplicates_and_excess_views() {
        let row = |o: &str| PredictionRow {
            source_id: "a".into(),
            order: o.into(),
            sequence: "[A] x [C] y [O] z [S] ok".into(),
        };
        assert!(vote_predictions(&[row("[A][C][O][S]"), row("[A][C][O][S]")], 2, 1.0).is_err());
        assert!(vote_predictions(&[row("[A][C][O][S]"), row("[A][C][S][O]")], 1, 0.5).is_err());
        let (out, _) = vote_predictions(&[row("[A][C][O][S]")], 3, 1.5).unwrap();
        assert!(out[0].quads.is_empty());
    }
}
