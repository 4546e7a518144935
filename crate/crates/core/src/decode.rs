//! Schema-constrained decoding for quad targets.
//!
//! The target grammar for an order `[X1][X2][X3][X4]` is
//!
//! ```text
//! target  := segment ( "[SSEP]" segment )* END
//! segment := X1 field(X1) X2 field(X2) X3 field(X3) X4 field(X4)
//! ```
//!
//! over whitespace tokens, where the field vocabularies are:
//!
//! | field     | content                                                  |
//! |-----------|----------------------------------------------------------|
//! | `[A]`/`[O]` | one or more sentence tokens, or `it`                   |
//! | `[C]`     | exactly one category (multi-token categories via a trie) |
//! | `[S]`     | exactly one of `great`, `bad`, `ok`                      |
//!
//! Sentence tokens are the whitespace tokens of the raw text plus their
//! punctuation-trimmed forms, so `delicious.` also admits `delicious`.
//! With `strict_spans` the aspect/opinion tokens must form a contiguous run
//! of the sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{OrderTemplate, PairwiseCandidate, OVERALL_MARKER, SEPARATOR};
use crate::dataset::Taxonomy;
use crate::model::{ElementKind, Sentence, NULL_WORD, SENTIMENT_WORDS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("empty category taxonomy")]
    EmptyTaxonomy,
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error("token {token:?} at position {position} is not allowed in state {state}")]
    Rejected {
        position: usize,
        token: String,
        state: String,
    },
    #[error("dead end: no allowed continuation in state {0}")]
    DeadEnd(String),
}

/// A decoding step: a word-level token or end of sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Word(String),
    End,
}

impl Token {
    pub fn word(s: impl Into<String>) -> Self {
        Token::Word(s.into())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => f.write_str(w),
            Token::End => f.write_str("<end>"),
        }
    }
}

#[derive(Debug, Default)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    terminal: bool,
}

/// Word-level prefix trie over the category strings.
#[derive(Debug)]
pub struct CategoryTrie {
    nodes: Vec<TrieNode>,
}

impl CategoryTrie {
    const ROOT: usize = 0;

    pub fn new<'a>(categories: impl IntoIterator<Item = &'a str>) -> Self {
        let mut nodes = vec![TrieNode::default()];
        for cat in categories {
            let mut at = Self::ROOT;
            let mut any = false;
            for w in cat.split_whitespace() {
                any = true;
                let next = nodes.len();
                at = *nodes[at].children.entry(w.to_string()).or_insert(next);
                if at == next {
                    nodes.push(TrieNode::default());
                }
            }
            if any {
                nodes[at].terminal = true;
            }
        }
        CategoryTrie { nodes }
    }

    fn child(&self, node: usize, word: &str) -> Option<usize> {
        self.nodes[node].children.get(word).copied()
    }

    fn children(&self, node: usize) -> impl Iterator<Item = &str> {
        self.nodes[node].children.keys().map(String::as_str)
    }

    fn is_terminal(&self, node: usize) -> bool {
        self.nodes[node].terminal
    }
}

/// Tokens that can never be field content.
pub fn is_reserved(word: &str) -> bool {
    word == SEPARATOR || ElementKind::from_marker(word).is_some()
}

/// The constraint set for one expected element order.
#[derive(Debug, Clone)]
pub struct DecodingSchema {
    categories: Arc<Taxonomy>,
    trie: Arc<CategoryTrie>,
    expected_order: OrderTemplate,
    strict_spans: bool,
}

impl DecodingSchema {
    pub fn new(categories: Taxonomy, expected_order: OrderTemplate) -> Result<Self, DecodeError> {
        let trie = CategoryTrie::new(categories.iter());
        if trie.nodes[CategoryTrie::ROOT].children.is_empty() {
            return Err(DecodeError::EmptyTaxonomy);
        }
        Ok(DecodingSchema {
            categories: Arc::new(categories),
            trie: Arc::new(trie),
            expected_order,
            strict_spans: false,
        })
    }

    /// Require aspect/opinion spans to be contiguous in the sentence.
    pub fn strict_spans(mut self, strict: bool) -> Self {
        self.strict_spans = strict;
        self
    }

    /// Same vocabularies, different marker order. Shares the trie.
    pub fn with_order(&self, order: OrderTemplate) -> Self {
        DecodingSchema {
            expected_order: order,
            ..self.clone()
        }
    }

    pub fn expected_order(&self) -> OrderTemplate {
        self.expected_order
    }

    pub fn categories(&self) -> &Taxonomy {
        &self.categories
    }

    pub fn sentiment_words(&self) -> &'static [&'static str; 3] {
        &SENTIMENT_WORDS
    }

    pub fn is_strict(&self) -> bool {
        self.strict_spans
    }

    /// Bind the schema to one sentence.
    pub fn for_sentence(&self, sentence: &Sentence) -> SentenceDecoder<'_> {
        SentenceDecoder::new(self, sentence)
    }
}

fn trim_punct(token: &str) -> &str {
    token.trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'' && c != '-')
}

/// The per-sentence half of the automaton: a schema plus the sentence's
/// token forms.
#[derive(Debug, Clone)]
pub struct SentenceDecoder<'s> {
    schema: &'s DecodingSchema,
    /// Admissible forms of each sentence position.
    positions: Vec<Vec<String>>,
    vocab: BTreeSet<String>,
}

/// Which part of the target grammar the decoder is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// Between segments; the next token must be the first marker.
    Boundary,
    Element(ElementKind),
    /// End of sequence has been emitted.
    Done,
}

/// Position in the target grammar after consuming some tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecoderState {
    consumed: Vec<String>,
    field: Field,
    /// Index into the expected order of the current field.
    slot: usize,
    field_tokens: usize,
    /// Category trie node while in a `[C]` field.
    trie_node: usize,
    /// Strict mode: sentence positions just past the span matched so far.
    span_ends: Vec<usize>,
    quad_index: usize,
}

impl DecoderState {
    pub fn consumed(&self) -> &[String] {
        &self.consumed
    }

    pub fn current_field(&self) -> Field {
        self.field
    }

    /// Number of completed quad segments.
    pub fn quad_index(&self) -> usize {
        self.quad_index
    }

    pub fn is_done(&self) -> bool {
        self.field == Field::Done
    }
}

impl fmt::Display for DecoderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = match self.field {
            Field::Boundary => "boundary".to_string(),
            Field::Element(k) => k.marker().to_string(),
            Field::Done => "done".to_string(),
        };
        write!(
            f,
            "field={field} quad={} after {} token(s)",
            self.quad_index,
            self.consumed.len()
        )
    }
}

/// The set of tokens allowed next.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allowed {
    pub words: BTreeSet<String>,
    pub end: bool,
}

impl Allowed {
    pub fn contains(&self, token: &Token) -> bool {
        match token {
            Token::Word(w) => self.words.contains(w),
            Token::End => self.end,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty() && !self.end
    }

    pub fn len(&self) -> usize {
        self.words.len() + usize::from(self.end)
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + '_ {
        self.words
            .iter()
            .cloned()
            .map(Token::Word)
            .chain(self.end.then_some(Token::End))
    }
}

impl<'s> SentenceDecoder<'s> {
    pub fn new(schema: &'s DecodingSchema, sentence: &Sentence) -> Self {
        let positions: Vec<Vec<String>> = sentence
            .tokens()
            .map(|tok| {
                let mut forms = Vec::with_capacity(2);
                if !is_reserved(tok) {
                    forms.push(tok.to_string());
                }
                let trimmed = trim_punct(tok);
                if !trimmed.is_empty() && trimmed != tok && !is_reserved(trimmed) {
                    forms.push(trimmed.to_string());
                }
                forms
            })
            .collect();
        let vocab = positions.iter().flatten().cloned().collect();
        SentenceDecoder {
            schema,
            positions,
            vocab,
        }
    }

    pub fn schema(&self) -> &DecodingSchema {
        self.schema
    }

    pub fn start(&self) -> DecoderState {
        DecoderState {
            consumed: Vec::new(),
            field: Field::Boundary,
            slot: 0,
            field_tokens: 0,
            trie_node: CategoryTrie::ROOT,
            span_ends: Vec::new(),
            quad_index: 0,
        }
    }

    fn order(&self) -> [ElementKind; 4] {
        self.schema.expected_order.kinds()
    }

    fn add_terminators(&self, state: &DecoderState, allowed: &mut Allowed) {
        if state.slot < 3 {
            allowed.words.insert(self.order()[state.slot + 1].marker().to_string());
        } else {
            allowed.words.insert(SEPARATOR.to_string());
            allowed.end = true;
        }
    }

    fn field_complete(&self, state: &DecoderState, kind: ElementKind) -> bool {
        match kind {
            ElementKind::Aspect | ElementKind::Opinion => state.field_tokens > 0,
            ElementKind::Category => self.schema.trie.is_terminal(state.trie_node),
            ElementKind::Sentiment => state.field_tokens == 1,
        }
    }

    fn span_continuations(&self, state: &DecoderState, allowed: &mut Allowed) {
        if !self.schema.strict_spans {
            allowed.words.extend(self.vocab.iter().cloned());
            allowed.words.insert(NULL_WORD.to_string());
            return;
        }
        if state.field_tokens == 0 {
            allowed.words.extend(self.vocab.iter().cloned());
            allowed.words.insert(NULL_WORD.to_string());
        } else {
            for &end in &state.span_ends {
                if let Some(forms) = self.positions.get(end) {
                    allowed.words.extend(forms.iter().cloned());
                }
            }
        }
    }

    /// Tokens allowed after `state`.
    pub fn allowed(&self, state: &DecoderState) -> Allowed {
        let mut allowed = Allowed::default();
        match state.field {
            Field::Done => {}
            Field::Boundary => {
                allowed.words.insert(self.order()[0].marker().to_string());
            }
            Field::Element(kind) => {
                match kind {
                    ElementKind::Aspect | ElementKind::Opinion => self.span_continuations(state, &mut allowed),
                    ElementKind::Category => {
                        allowed
                            .words
                            .extend(self.schema.trie.children(state.trie_node).map(str::to_string));
                    }
                    ElementKind::Sentiment => {
                        if state.field_tokens == 0 {
                            allowed.words.extend(SENTIMENT_WORDS.iter().map(|w| w.to_string()));
                        }
                    }
                }
                if self.field_complete(state, kind) {
                    self.add_terminators(state, &mut allowed);
                }
            }
        }
        allowed
    }

    fn enter_field(&self, state: &mut DecoderState, slot: usize) {
        state.slot = slot;
        state.field = Field::Element(self.order()[slot]);
        state.field_tokens = 0;
        state.trie_node = CategoryTrie::ROOT;
        state.span_ends.clear();
    }

    fn advance_span(&self, state: &mut DecoderState, word: &str) {
        if !self.schema.strict_spans {
            return;
        }
        let matches = |p: usize| self.positions[p].iter().any(|f| f == word);
        if state.field_tokens == 0 {
            state.span_ends = (0..self.positions.len())
                .filter(|&p| matches(p))
                .map(|p| p + 1)
                .collect();
        } else {
            state.span_ends = state
                .span_ends
                .iter()
                .copied()
                .filter(|&p| p < self.positions.len() && matches(p))
                .map(|p| p + 1)
                .collect();
        }
    }

    /// Consume one token, or report that it is not allowed.
    pub fn advance(&self, state: &mut DecoderState, token: &Token) -> Result<(), DecodeError> {
        if !self.permits(state, token) {
            return Err(DecodeError::Rejected {
                position: state.consumed.len(),
                token: token.to_string(),
                state: state.to_string(),
            });
        }
        let word = match token {
            Token::End => {
                state.field = Field::Done;
                state.quad_index += 1;
                return Ok(());
            }
            Token::Word(w) => w,
        };
        state.consumed.push(word.clone());
        match state.field {
            Field::Done => unreachable!("nothing is allowed after end"),
            Field::Boundary => self.enter_field(state, 0),
            Field::Element(kind) => {
                if word == SEPARATOR {
                    state.field = Field::Boundary;
                    state.quad_index += 1;
                } else if ElementKind::from_marker(word).is_some() {
                    // Only the next marker of the order can have been allowed.
                    self.enter_field(state, state.slot + 1);
                } else {
                    match kind {
                        ElementKind::Aspect | ElementKind::Opinion => self.advance_span(state, word),
                        ElementKind::Category => {
                            state.trie_node = self
                                .schema
                                .trie
                                .child(state.trie_node, word)
                                .expect("allowed category word has a trie edge");
                        }
                        ElementKind::Sentiment => {}
                    }
                    state.field_tokens += 1;
                }
            }
        }
        Ok(())
    }

    /// Same answer as `self.allowed(state).contains(token)` without
    /// building the set.
    pub fn permits(&self, state: &DecoderState, token: &Token) -> bool {
        let kind = match state.field {
            Field::Done => return false,
            Field::Boundary => return matches!(token, Token::Word(w) if w == self.order()[0].marker()),
            Field::Element(kind) => kind,
        };
        let complete = self.field_complete(state, kind);
        let word = match token {
            Token::End => return complete && state.slot == 3,
            Token::Word(w) => w.as_str(),
        };
        if complete {
            let terminator = if state.slot < 3 {
                word == self.order()[state.slot + 1].marker()
            } else {
                word == SEPARATOR
            };
            if terminator {
                return true;
            }
        }
        match kind {
            ElementKind::Aspect | ElementKind::Opinion => {
                if !self.schema.strict_spans || state.field_tokens == 0 {
                    word == NULL_WORD || self.vocab.contains(word)
                } else {
                    state.span_ends.iter().any(|&end| {
                        self.positions
                            .get(end)
                            .is_some_and(|forms| forms.iter().any(|f| f == word))
                    })
                }
            }
            ElementKind::Category => self.schema.trie.child(state.trie_node, word).is_some(),
            ElementKind::Sentiment => state.field_tokens == 0 && SENTIMENT_WORDS.contains(&word),
        }
    }

    /// Whether `state` may legally end here.
    pub fn can_end(&self, state: &DecoderState) -> bool {
        self.allowed(state).end
    }
}

/// Allowed continuations of `state` for `sentence` under `schema`.
pub fn next_allowed(state: &DecoderState, sentence: &Sentence, schema: &DecodingSchema) -> Allowed {
    schema.for_sentence(sentence).allowed(state)
}

/// Replay whitespace tokens of `prefix` from the start state.
pub fn state_after(prefix: &str, sentence: &Sentence, schema: &DecodingSchema) -> Result<DecoderState, DecodeError> {
    let dec = schema.for_sentence(sentence);
    let mut state = dec.start();
    for w in prefix.split_whitespace() {
        dec.advance(&mut state, &Token::word(w))?;
    }
    Ok(state)
}

/// Where and why a sequence was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Whitespace-token index of the first offending token; equal to the
    /// token count when the sequence ends too early.
    pub position: usize,
    /// The offending token, `None` for a premature end.
    pub token: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.token {
            Some(t) => write!(f, "token {t:?} at position {} is not allowed", self.position),
            None => write!(f, "sequence ends prematurely at position {}", self.position),
        }
    }
}

/// `Ok(())` for a valid sequence, otherwise the first violation.
pub type Verdict = Result<(), Violation>;

/// Check a complete quad target against the schema.
pub fn validate_sequence(target: &str, sentence: &Sentence, schema: &DecodingSchema) -> Verdict {
    let dec = schema.for_sentence(sentence);
    let mut state = dec.start();
    let mut n = 0;
    for (i, w) in target.split_whitespace().enumerate() {
        n = i + 1;
        if dec.advance(&mut state, &Token::word(w)).is_err() {
            return Err(Violation {
                position: i,
                token: Some(w.to_string()),
            });
        }
    }
    if dec.can_end(&state) {
        Ok(())
    } else {
        Err(Violation {
            position: n,
            token: None,
        })
    }
}

/// Marker skeleton used in relaxed validation of pairwise and overall
/// targets: each segment is the marker list in order, every marker followed
/// by at least one non-marker token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton(Vec<String>);

impl Skeleton {
    pub fn pairwise(c: &PairwiseCandidate) -> Self {
        Skeleton(c.pairs().iter().map(|p| p.marker().to_string()).collect())
    }

    pub fn overall() -> Self {
        Skeleton(vec![OVERALL_MARKER.to_string()])
    }

    pub fn quad(order: &OrderTemplate) -> Self {
        Skeleton(order.kinds().iter().map(|k| k.marker().to_string()).collect())
    }
}

fn is_skeleton_marker(w: &str) -> bool {
    w.len() >= 3 && w.starts_with('[') && w.ends_with(']') && w[1..w.len() - 1].chars().all(|c| c.is_ascii_uppercase())
}

/// Relaxed validation: only the marker skeleton is checked.
pub fn validate_skeleton(target: &str, skeleton: &Skeleton) -> Verdict {
    let markers = &skeleton.0;
    let mut slot = 0usize;
    let mut content = 0usize;
    let mut n = 0;
    let fail = |position: usize, token: &str| {
        Err(Violation {
            position,
            token: Some(token.to_string()),
        })
    };
    for (i, w) in target.split_whitespace().enumerate() {
        n = i + 1;
        if w == SEPARATOR {
            if slot != markers.len() || content == 0 {
                return fail(i, w);
            }
            slot = 0;
            content = 0;
        } else if is_skeleton_marker(w) {
            if slot == markers.len() || markers[slot] != w || (slot > 0 && content == 0) {
                return fail(i, w);
            }
            slot += 1;
            content = 0;
        } else {
            if slot == 0 {
                return fail(i, w);
            }
            content += 1;
        }
    }
    if slot == markers.len() && content > 0 {
        Ok(())
    } else {
        Err(Violation {
            position: n,
            token: None,
        })
    }
}

/// Stand-in for a generative model: scored proposals for the next token.
pub trait NextTokenProvider {
    fn propose(&mut self, input: &str, consumed: &[String]) -> Vec<(Token, f64)>;
}

impl<P: NextTokenProvider + ?Sized> NextTokenProvider for &mut P {
    fn propose(&mut self, input: &str, consumed: &[String]) -> Vec<(Token, f64)> {
        (**self).propose(input, consumed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub beam: usize,
    /// Provider-driven steps before the remaining structure is forced.
    pub max_steps: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            beam: 1,
            max_steps: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub sequence: String,
    pub score: f64,
    /// Steps where no proposal was allowed and the fallback token was used.
    pub forced_steps: usize,
    /// The step cap was hit and the sequence was completed by fallback.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    state: DecoderState,
    score: f64,
    forced: usize,
}

/// Deterministic choice when the provider offers nothing usable: end if
/// possible, then structure tokens, then `it`, then the smallest word.
fn fallback(allowed: &Allowed) -> Option<Token> {
    if allowed.end {
        return Some(Token::End);
    }
    if let Some(w) = allowed.words.iter().find(|w| is_reserved(w)) {
        return Some(Token::word(w.as_str()));
    }
    if allowed.words.contains(NULL_WORD) {
        return Some(Token::word(NULL_WORD));
    }
    allowed.words.iter().next().map(|w| Token::word(w.as_str()))
}

fn render(state: &DecoderState) -> String {
    state.consumed.join(" ")
}

/// Beam search over provider proposals intersected with the schema. The
/// result always passes [`validate_sequence`].
pub fn constrained_generate<P: NextTokenProvider + ?Sized>(
    input: &str,
    sentence: &Sentence,
    schema: &DecodingSchema,
    provider: &mut P,
    config: GenerationConfig,
) -> Result<Generation, DecodeError> {
    if config.beam == 0 {
        return Err(DecodeError::ZeroBeam);
    }
    let dec = schema.for_sentence(sentence);
    let mut beam = vec![Hypothesis {
        state: dec.start(),
        score: 0.0,
        forced: 0,
    }];

    for _ in 0..config.max_steps {
        if beam.iter().all(|h| h.state.is_done()) {
            break;
        }
        let mut candidates: Vec<Hypothesis> = Vec::new();
        for hyp in &beam {
            if hyp.state.is_done() {
                candidates.push(hyp.clone());
                continue;
            }
            let allowed = dec.allowed(&hyp.state);
            let mut best: BTreeMap<Token, f64> = BTreeMap::new();
            for (tok, score) in provider.propose(input, hyp.state.consumed()) {
                if score.is_nan() || !allowed.contains(&tok) {
                    continue;
                }
                let slot = best.entry(tok).or_insert(f64::NEG_INFINITY);
                if score > *slot {
                    *slot = score;
                }
            }
            let mut expansions: Vec<(Token, f64, usize)> = best.into_iter().map(|(t, s)| (t, s, 0)).collect();
            if expansions.is_empty() {
                let tok = fallback(&allowed).ok_or_else(|| DecodeError::DeadEnd(hyp.state.to_string()))?;
                expansions.push((tok, 0.0, 1));
            }
            // Highest score first; BTreeMap order breaks ties.
            expansions.sort_by(|a, b| b.1.total_cmp(&a.1));
            for (tok, s, forced) in expansions.into_iter().take(config.beam) {
                let mut state = hyp.state.clone();
                dec.advance(&mut state, &tok)?;
                candidates.push(Hypothesis {
                    state,
                    score: hyp.score + s,
                    forced: hyp.forced + forced,
                });
            }
        }
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        candidates.truncate(config.beam);
        beam = candidates;
    }

    let truncated = !beam.iter().any(|h| h.state.is_done());
    let mut best = if truncated {
        beam.into_iter().next().expect("beam is never empty")
    } else {
        beam.into_iter().find(|h| h.state.is_done()).expect("checked above")
    };
    while !best.state.is_done() {
        let allowed = dec.allowed(&best.state);
        let tok = fallback(&allowed).ok_or_else(|| DecodeError::DeadEnd(best.state.to_string()))?;
        dec.advance(&mut best.state, &tok)?;
        best.forced += 1;
    }
    Ok(Generation {
        sequence: render(&best.state),
        score: best.score,
        forced_steps: best.forced,
        truncated,
    })
}

/// Always proposes the gold continuation of a known target. Inputs it has
/// no target for, and states off the gold path, get no proposals.
#[derive(Debug, Clone, Default)]
pub struct GoldProvider {
    targets: std::collections::HashMap<String, Vec<String>>,
}

impl GoldProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, input: impl Into<String>, target: &str) {
        self.targets
            .insert(input.into(), target.split_whitespace().map(str::to_string).collect());
    }
}

impl NextTokenProvider for GoldProvider {
    fn propose(&mut self, input: &str, consumed: &[String]) -> Vec<(Token, f64)> {
        let Some(gold) = self.targets.get(input) else {
            return Vec::new();
        };
        if consumed.len() > gold.len() || gold[..consumed.len()] != *consumed {
            return Vec::new();
        }
        match gold.get(consumed.len()) {
            Some(w) => vec![(Token::word(w.as_str()), 0.0), (Token::End, -1.0)],
            None => vec![(Token::End, 0.0)],
        }
    }
}

/// Uniform random scores over a fixed vocabulary (plus end of sequence).
#[derive(Debug, Clone)]
pub struct RandomProvider {
    rng: ChaCha8Rng,
    vocab: Vec<Token>,
}

impl RandomProvider {
    pub fn new(seed: u64, vocab: impl IntoIterator<Item = String>) -> Self {
        let mut tokens: Vec<Token> = vocab.into_iter().map(Token::Word).collect();
        tokens.push(Token::End);
        RandomProvider {
            rng: ChaCha8Rng::seed_from_u64(seed),
            vocab: tokens,
        }
    }

    /// Everything the schema could emit for `sentence`, plus a few junk
    /// words the schema never allows.
    pub fn schema_vocab(schema: &DecodingSchema, sentence: &Sentence) -> Vec<String> {
        let dec = schema.for_sentence(sentence);
        let mut v: BTreeSet<String> = dec.vocab.clone();
        v.insert(NULL_WORD.to_string());
        v.extend(SENTIMENT_WORDS.iter().map(|w| w.to_string()));
        v.extend(
            schema
                .categories()
                .iter()
                .flat_map(|c| c.split_whitespace().map(str::to_string)),
        );
        v.extend(ElementKind::ALL.iter().map(|k| k.marker().to_string()));
        v.insert(SEPARATOR.to_string());
        v.extend(["<junk>", "amazing", "[X]"].map(str::to_string));
        v.into_iter().collect()
    }
}

impl NextTokenProvider for RandomProvider {
    fn propose(&mut self, _input: &str, _consumed: &[String]) -> Vec<(Token, f64)> {
        self.vocab
            .iter()
            .map(|t| (t.clone(), self.rng.random::<f64>()))
            .collect()
    }
}

/// One row of the predictions JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub source_id: String,
    pub order: String,
    pub sequence: String,
}
