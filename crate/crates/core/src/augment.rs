//! Multi-task training instances: quad, pairwise and overall targets.
//!
//! Every training sentence yields three kinds of instances:
//!
//! * quad prediction, one per element order (`[A][C][O][S]`, `[O][A][C][S]`, ...),
//! * pairwise relation, one per pair-marker candidate (`[AO]`, `[AO][CS]`, ...),
//! * overall relation, a single paraphrase `The <c> is <s> because <a> is <o>`.
//!
//! Multi-quad sentences join per-quad segments with ` [SSEP] `.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{map_quad, ElementKind, MappedQuad, Quad, Sentence};

pub const QUAD_PREFIX: &str = "Quad Prediction: ";
pub const PAIRWISE_PREFIX: &str = "Pairwise Relation: ";
pub const OVERALL_PREFIX: &str = "Overall Relation: ";
pub const SEPARATOR: &str = "[SSEP]";
/// Separator between quad segments as it appears inside a target.
pub const SEGMENT_JOIN: &str = " [SSEP] ";
pub const OVERALL_MARKER: &str = "[CSAO]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("sentence {0:?} has no quads to render")]
    EmptyQuads(String),
    #[error("PPS size {0} is outside [4, 16]")]
    SampleSize(usize),
    #[error("invalid order template {0:?}")]
    BadOrder(String),
    #[error("invalid pairwise candidate {0:?}")]
    BadCandidate(String),
}

/// A permutation of the four element markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderTemplate([ElementKind; 4]);

impl OrderTemplate {
    pub fn new(order: [ElementKind; 4]) -> Option<Self> {
        let mut seen = [false; 4];
        for k in order {
            let i = k as usize;
            if seen[i] {
                return None;
            }
            seen[i] = true;
        }
        Some(OrderTemplate(order))
    }

    /// The default ACOS order.
    pub fn canonical() -> Self {
        OrderTemplate(ElementKind::ALL)
    }

    pub fn kinds(&self) -> [ElementKind; 4] {
        self.0
    }

    pub fn first(&self) -> ElementKind {
        self.0[0]
    }

    pub fn surface(&self) -> String {
        self.0.iter().map(|k| k.marker()).collect()
    }
}

impl fmt::Display for OrderTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in self.0 {
            f.write_str(k.marker())?;
        }
        Ok(())
    }
}

impl FromStr for OrderTemplate {
    type Err = AugmentError;

    /// Accepts a marker surface (`[A][C][O][S]`) or bare letters (`ACOS`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AugmentError::BadOrder(s.to_string());
        let letters: String = if s.contains('[') {
            let inner = s
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(bad)?;
            let parts: Vec<&str> = inner.split("][").collect();
            if parts.iter().any(|p| p.len() != 1) {
                return Err(bad());
            }
            parts.concat()
        } else {
            s.trim().to_string()
        };
        if !letters.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(bad());
        }
        let kinds: Vec<ElementKind> = letters
            .chars()
            .map(|c| ElementKind::from_letter(c).ok_or_else(bad))
            .collect::<Result<_, _>>()?;
        let arr: [ElementKind; 4] = kinds.try_into().map_err(|_| bad())?;
        OrderTemplate::new(arr).ok_or_else(bad)
    }
}

/// All 24 orders in lexicographic order of their surfaces.
pub fn enumerate_quad_orders() -> Vec<OrderTemplate> {
    fn permute(prefix: &mut Vec<ElementKind>, rest: &mut Vec<ElementKind>, out: &mut Vec<OrderTemplate>) {
        if rest.is_empty() {
            let arr: [ElementKind; 4] = prefix.as_slice().try_into().expect("four kinds");
            out.push(OrderTemplate(arr));
            return;
        }
        for i in 0..rest.len() {
            let k = rest.remove(i);
            prefix.push(k);
            permute(prefix, rest, out);
            prefix.pop();
            rest.insert(i, k);
        }
    }
    let mut out = Vec::with_capacity(24);
    permute(&mut Vec::with_capacity(4), &mut ElementKind::ALL.to_vec(), &mut out);
    out
}

/// One of the four base pair relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairMarker {
    AO,
    CS,
    AS,
    CO,
}

impl PairMarker {
    pub const ALL: [PairMarker; 4] = [PairMarker::AO, PairMarker::CS, PairMarker::AS, PairMarker::CO];

    pub fn marker(self) -> &'static str {
        match self {
            PairMarker::AO => "[AO]",
            PairMarker::CS => "[CS]",
            PairMarker::AS => "[AS]",
            PairMarker::CO => "[CO]",
        }
    }

    pub fn from_marker(s: &str) -> Option<Self> {
        PairMarker::ALL.into_iter().find(|p| p.marker() == s)
    }

    /// Left and right element of `<left> is <right>`.
    pub fn elements(self) -> (ElementKind, ElementKind) {
        match self {
            PairMarker::AO => (ElementKind::Aspect, ElementKind::Opinion),
            PairMarker::CS => (ElementKind::Category, ElementKind::Sentiment),
            PairMarker::AS => (ElementKind::Aspect, ElementKind::Sentiment),
            PairMarker::CO => (ElementKind::Category, ElementKind::Opinion),
        }
    }
}

/// A base pair marker or an ordered composite of two distinct ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairwiseCandidate {
    Base(PairMarker),
    Composite(PairMarker, PairMarker),
}

impl PairwiseCandidate {
    pub fn composite(first: PairMarker, second: PairMarker) -> Option<Self> {
        (first != second).then_some(PairwiseCandidate::Composite(first, second))
    }

    pub fn pairs(&self) -> Vec<PairMarker> {
        match *self {
            PairwiseCandidate::Base(p) => vec![p],
            PairwiseCandidate::Composite(a, b) => vec![a, b],
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, PairwiseCandidate::Base(_))
    }

    pub fn surface(&self) -> String {
        self.pairs().iter().map(|p| p.marker()).collect()
    }
}

impl fmt::Display for PairwiseCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface())
    }
}

impl FromStr for PairwiseCandidate {
    type Err = AugmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AugmentError::BadCandidate(s.to_string());
        let s = s.trim();
        if s.len() == 4 {
            return PairMarker::from_marker(s).map(PairwiseCandidate::Base).ok_or_else(bad);
        }
        if s.len() == 8 && s.is_char_boundary(4) {
            let a = PairMarker::from_marker(&s[..4]).ok_or_else(bad)?;
            let b = PairMarker::from_marker(&s[4..]).ok_or_else(bad)?;
            return PairwiseCandidate::composite(a, b).ok_or_else(bad);
        }
        Err(bad())
    }
}

/// The 4 base candidates followed by the 12 ordered composites.
pub fn enumerate_pairwise_candidates() -> Vec<PairwiseCandidate> {
    let base = PairMarker::ALL.into_iter().map(PairwiseCandidate::Base);
    let composites = PairMarker::ALL.into_iter().flat_map(|a| {
        PairMarker::ALL
            .into_iter()
            .filter_map(move |b| PairwiseCandidate::composite(a, b))
    });
    base.chain(composites).collect()
}

/// Pairwise permutation sampling: the 4 base candidates plus `k - 4`
/// composites drawn uniformly without replacement. Sampled composites keep
/// their enumeration order.
pub fn pps_sample(k: usize, seed: u64) -> Result<Vec<PairwiseCandidate>, AugmentError> {
    if !(4..=16).contains(&k) {
        return Err(AugmentError::SampleSize(k));
    }
    let all = enumerate_pairwise_candidates();
    let (base, composites) = all.split_at(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, composites.len(), k - 4).into_vec();
    picked.sort_unstable();
    Ok(base
        .iter()
        .copied()
        .chain(picked.into_iter().map(|i| composites[i]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Quad,
    Pairwise,
    Overall,
}

impl TaskKind {
    pub fn prefix(self) -> &'static str {
        match self {
            TaskKind::Quad => QUAD_PREFIX,
            TaskKind::Pairwise => PAIRWISE_PREFIX,
            TaskKind::Overall => OVERALL_PREFIX,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Quad => "quad",
            TaskKind::Pairwise => "pairwise",
            TaskKind::Overall => "overall",
        })
    }
}

/// One augmented training example; also the augmented-corpus JSONL row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task: TaskKind,
    pub source_id: String,
    #[serde(rename = "order")]
    pub order_surface: String,
    pub input: String,
    pub target: String,
}

fn mapped_segments<'a>(s: &Sentence, quads: &'a [Quad]) -> Result<impl Iterator<Item = MappedQuad> + 'a, AugmentError> {
    if quads.is_empty() {
        return Err(AugmentError::EmptyQuads(s.id.clone()));
    }
    Ok(quads.iter().map(map_quad))
}

fn join_segments(segments: impl Iterator<Item = String>) -> String {
    segments.collect::<Vec<_>>().join(SEGMENT_JOIN)
}

/// `[A] pizza [C] food quality ...` for one quad in the given order.
pub fn render_quad_segment(mq: &MappedQuad, t: &OrderTemplate) -> String {
    t.kinds()
        .iter()
        .map(|&k| format!("{} {}", k.marker(), mq.element(k)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_quad_target(quads: &[MappedQuad], t: &OrderTemplate) -> String {
    join_segments(quads.iter().map(|mq| render_quad_segment(mq, t)))
}

pub fn render_quad_input(s: &Sentence, t: &OrderTemplate) -> String {
    format!("{QUAD_PREFIX}{} {}", s.text, t.surface())
}

pub fn render_quad_instance(s: &Sentence, quads: &[Quad], t: &OrderTemplate) -> Result<TaskInstance, AugmentError> {
    let target = join_segments(mapped_segments(s, quads)?.map(|mq| render_quad_segment(&mq, t)));
    Ok(TaskInstance {
        task: TaskKind::Quad,
        source_id: s.id.clone(),
        order_surface: t.surface(),
        input: render_quad_input(s, t),
        target,
    })
}

fn render_pair_segment(mq: &MappedQuad, c: &PairwiseCandidate) -> String {
    c.pairs()
        .iter()
        .map(|p| {
            let (left, right) = p.elements();
            format!("{} {} is {}", p.marker(), mq.element(left), mq.element(right))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_pairwise_instance(
    s: &Sentence,
    quads: &[Quad],
    c: &PairwiseCandidate,
) -> Result<TaskInstance, AugmentError> {
    let surface = c.surface();
    let target = join_segments(mapped_segments(s, quads)?.map(|mq| render_pair_segment(&mq, c)));
    Ok(TaskInstance {
        task: TaskKind::Pairwise,
        source_id: s.id.clone(),
        input: format!("{PAIRWISE_PREFIX}{} {surface}", s.text),
        order_surface: surface,
        target,
    })
}

pub fn render_overall_instance(s: &Sentence, quads: &[Quad]) -> Result<TaskInstance, AugmentError> {
    let target = join_segments(mapped_segments(s, quads)?.map(|mq| {
        format!(
            "{OVERALL_MARKER} The {} is {} because {} is {}",
            mq.category, mq.sentiment, mq.aspect, mq.opinion
        )
    }));
    Ok(TaskInstance {
        task: TaskKind::Overall,
        source_id: s.id.clone(),
        order_surface: String::new(),
        input: format!("{OVERALL_PREFIX}{}", s.text),
        target,
    })
}

/// Instances for one sentence: quad orders, then pairwise candidates, then
/// the overall instance.
pub fn sentence_instances(
    s: &Sentence,
    quads: &[Quad],
    quad_orders: &[OrderTemplate],
    pairwise: &[PairwiseCandidate],
    include_overall: bool,
) -> Result<Vec<TaskInstance>, AugmentError> {
    let mut out = Vec::with_capacity(quad_orders.len() + pairwise.len() + 1);
    for t in quad_orders {
        out.push(render_quad_instance(s, quads, t)?);
    }
    for c in pairwise {
        out.push(render_pairwise_instance(s, quads, c)?);
    }
    if include_overall {
        out.push(render_overall_instance(s, quads)?);
    }
    Ok(out)
}

/// The multi-task training corpus. Sentences without quads are skipped.
/// Output order is (sentence index, task, candidate index) regardless of
/// how many worker threads run.
pub fn build_training_corpus(
    d: &Dataset,
    quad_orders: &[OrderTemplate],
    pairwise: &[PairwiseCandidate],
    include_overall: bool,
) -> Result<Vec<TaskInstance>, AugmentError> {
    use rayon::prelude::*;

    let per_sentence: Vec<Vec<TaskInstance>> = d
        .examples
        .par_iter()
        .filter(|e| !e.quads.is_empty())
        .map(|e| sentence_instances(&e.sentence, &e.quads, quad_orders, pairwise, include_overall))
        .collect::<Result<_, _>>()?;
    Ok(per_sentence.into_iter().flatten().collect())
}
