//! Turning generated sequences back into quads, and threshold voting across
//! the per-order views of one sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::augment::{OrderTemplate, SEPARATOR};
use crate::model::{unmap_quad, ElementKind, MappedQuad, Quad};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VoteError {
    #[error("no views to aggregate")]
    NoViews,
    #[error("vote threshold {0} must be positive")]
    BadThreshold(f64),
    #[error("{got} views for sentence {source_id:?}, but k = {k}")]
    TooManyViews { source_id: String, got: usize, k: usize },
}

/// Why a segment of a generated sequence was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentDiagnostic {
    pub segment: usize,
    pub text: String,
    pub reason: String,
}

impl fmt::Display for SegmentDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "segment {} {:?}: {}", self.segment, self.text, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTarget {
    pub quads: Vec<Quad>,
    pub diagnostics: Vec<SegmentDiagnostic>,
}

fn parse_segment(segment: &str, order: &OrderTemplate) -> Result<Quad, String> {
    let kinds = order.kinds();
    let mut rest = segment
        .strip_prefix(kinds[0].marker())
        .ok_or_else(|| format!("expected {} at start", kinds[0].marker()))?;
    let mut values: [&str; 4] = [""; 4];
    for (i, kind) in kinds.iter().enumerate() {
        let (value, after) = match kinds.get(i + 1) {
            Some(next) => rest
                .split_once(next.marker())
                .ok_or_else(|| format!("missing {}", next.marker()))?,
            None => (rest, ""),
        };
        let value = value.trim();
        if value.is_empty() {
            return Err(format!("empty {} element", kind.marker()));
        }
        if let Some(m) = ElementKind::ALL.iter().find(|k| value.contains(k.marker())) {
            return Err(format!("stray marker {} in {} element", m.marker(), kind.marker()));
        }
        values[*kind as usize] = value;
        rest = after;
    }
    let mq = MappedQuad {
        aspect: values[ElementKind::Aspect as usize].to_string(),
        category: values[ElementKind::Category as usize].to_string(),
        opinion: values[ElementKind::Opinion as usize].to_string(),
        sentiment: values[ElementKind::Sentiment as usize].to_string(),
    };
    unmap_quad(&mq).map_err(|e| e.to_string())
}

/// Parse a generated quad target written in `order`. Malformed segments are
/// dropped and reported; they never fail the whole sequence.
pub fn parse_target(target: &str, order: &OrderTemplate) -> ParsedTarget {
    let mut out = ParsedTarget::default();
    if target.trim().is_empty() {
        out.diagnostics.push(SegmentDiagnostic {
            segment: 0,
            text: String::new(),
            reason: "empty sequence".into(),
        });
        return out;
    }
    for (i, segment) in target.split(SEPARATOR).enumerate() {
        match parse_segment(segment.trim(), order) {
            Ok(q) => out.quads.push(q),
            Err(reason) => out.diagnostics.push(SegmentDiagnostic {
                segment: i,
                text: segment.trim().to_string(),
                reason,
            }),
        }
    }
    out
}

/// The quads one order predicted for a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderView {
    pub order: OrderTemplate,
    pub quads: BTreeSet<Quad>,
}

impl OrderView {
    pub fn new(order: OrderTemplate, quads: impl IntoIterator<Item = Quad>) -> Self {
        OrderView {
            order,
            quads: quads.into_iter().collect(),
        }
    }

    /// Parse a generated sequence into a view. Diagnostics are discarded.
    pub fn from_sequence(order: OrderTemplate, sequence: &str) -> Self {
        OrderView::new(order, parse_target(sequence, &order).quads)
    }
}

/// How many views predicted each quad.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTally {
    pub votes: BTreeMap<Quad, usize>,
    pub threshold: f64,
    pub k: usize,
}

impl VoteTally {
    pub fn new(views: &[OrderView], threshold: f64) -> Result<Self, VoteError> {
        Self::with_k(views, views.len(), threshold)
    }

    /// Tally with an explicit `k`; views missing from `views` count as
    /// empty.
    pub fn with_k(views: &[OrderView], k: usize, threshold: f64) -> Result<Self, VoteError> {
        if k == 0 {
            return Err(VoteError::NoViews);
        }
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(VoteError::BadThreshold(threshold));
        }
        let mut votes = BTreeMap::new();
        for v in views {
            for q in &v.quads {
                *votes.entry(q.clone()).or_insert(0) += 1;
            }
        }
        Ok(VoteTally { votes, threshold, k })
    }

    /// Quads with `vote >= threshold`.
    pub fn accepted(&self) -> BTreeSet<Quad> {
        self.votes
            .iter()
            .filter(|(_, &n)| n as f64 >= self.threshold)
            .map(|(q, _)| q.clone())
            .collect()
    }
}

/// Keep every quad predicted by at least `tau` of the views.
pub fn aggregate_votes(views: &[OrderView], tau: f64) -> Result<BTreeSet<Quad>, VoteError> {
    Ok(VoteTally::new(views, tau)?.accepted())
}

/// The default threshold `k / 2`.
pub fn default_tau(k: usize) -> f64 {
    k as f64 / 2.0
}
