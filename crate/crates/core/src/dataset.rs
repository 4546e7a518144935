//! Reading `####`-separated ASQP data files, canonical JSONL interchange and
//! corpus statistics.
//!
//! A raw line looks like
//!
//! ```text
//! The pizza is delicious .####[['pizza', 'food quality', 'delicious', 'positive']]
//! ```
//!
//! The quad list is a Python-style literal: a bracketed list of 4-element
//! string lists, single or double quoted. Public releases disagree on the
//! in-file position of each element, so the layout is declared with an
//! [`ElementOrder`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ElementKind, MappingError, Polarity, Quad, Sentence};

pub const FIELD_SEPARATOR: &str = "####";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `####` separator")]
    MissingSeparator,
    #[error("empty sentence text")]
    EmptyText,
    #[error("malformed quad list at byte {offset}: {message}")]
    Literal { offset: usize, message: String },
    #[error("quad entry {index} has {arity} elements, expected 4")]
    Arity { index: usize, arity: usize },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("category {0:?} is not in the taxonomy")]
    UnknownCategory(String),
    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),
    #[error("invalid canonical record: {0}")]
    Json(String),
}

/// A parse failure tagged with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Every failing line, in line order.
    #[error("{} malformed line(s), first: {}", .0.len(), .0[0])]
    Parse(Vec<ParseError>),
}

/// Which file position holds which element, e.g. `acso` for the ASQP
/// releases that store `[aspect, category, sentiment, opinion]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElementOrder([ElementKind; 4]);

impl ElementOrder {
    pub fn new(positions: [ElementKind; 4]) -> Option<Self> {
        let distinct: HashSet<_> = positions.iter().collect();
        (distinct.len() == 4).then_some(ElementOrder(positions))
    }

    pub fn positions(&self) -> [ElementKind; 4] {
        self.0
    }
}

impl Default for ElementOrder {
    fn default() -> Self {
        ElementOrder(ElementKind::ALL)
    }
}

impl FromStr for ElementOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kinds: Vec<ElementKind> = s
            .chars()
            .filter(|c| c.is_alphabetic())
            .map(|c| ElementKind::from_letter(c).ok_or_else(|| format!("unknown element {c:?}")))
            .collect::<Result<_, _>>()?;
        let arr: [ElementKind; 4] = kinds
            .try_into()
            .map_err(|_| format!("element order {s:?} must name exactly 4 elements"))?;
        ElementOrder::new(arr).ok_or_else(|| format!("element order {s:?} repeats an element"))
    }
}

impl TryFrom<String> for ElementOrder {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ElementOrder> for String {
    fn from(o: ElementOrder) -> String {
        o.to_string()
    }
}

impl fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in self.0 {
            write!(f, "{}", k.letter().to_ascii_lowercase())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// A sentence with its gold quads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub sentence: Sentence,
    pub quads: Vec<Quad>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, split: Split, examples: Vec<Example>) -> Self {
        Dataset {
            name: name.into(),
            split,
            examples,
        }
    }

    /// Examples with at least one quad.
    pub fn usable(&self) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(|e| !e.quads.is_empty())
    }

    /// Union of the categories observed in this dataset.
    pub fn categories(&self) -> Taxonomy {
        Taxonomy(
            self.examples
                .iter()
                .flat_map(|e| e.quads.iter().map(|q| q.category.clone()))
                .collect(),
        )
    }

    pub fn check_unique_ids(&self) -> Result<(), ParseError> {
        let mut seen = HashSet::new();
        for (i, e) in self.examples.iter().enumerate() {
            if !seen.insert(e.sentence.id.as_str()) {
                return Err(ParseError {
                    line: i + 1,
                    kind: ParseErrorKind::DuplicateId(e.sentence.id.clone()),
                });
            }
        }
        Ok(())
    }
}

/// The category set quads are checked against and decoding draws from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy(pub BTreeSet<String>);

impl Taxonomy {
    /// One category per line; blank lines are ignored.
    pub fn from_lines(text: &str) -> Self {
        Taxonomy(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn contains(&self, category: &str) -> bool {
        self.0.contains(category)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_sentences: usize,
    pub n_quads: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} sentences, {} quads", self.n_sentences, self.n_quads)
    }
}

pub fn compute_stats(d: &Dataset) -> DatasetStats {
    DatasetStats {
        n_sentences: d.examples.len(),
        n_quads: d.examples.iter().map(|e| e.quads.len()).sum(),
    }
}

/// Minimal reader for the quad-list literal.
struct LiteralReader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> LiteralReader<'a> {
    fn err(&self, message: impl Into<String>) -> ParseErrorKind {
        ParseErrorKind::Literal {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseErrorKind> {
        self.skip_ws();
        match self.peek() {
            Some(got) if got == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(got) => Err(self.err(format!("expected {c:?}, found {got:?}"))),
            None => Err(self.err(format!("expected {c:?}, found end of input"))),
        }
    }

    /// Parses `[ item, item, ... ]` with an optional trailing comma.
    fn list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseErrorKind>,
    ) -> Result<Vec<T>, ParseErrorKind> {
        self.expect('[')?;
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(']') {
                self.pos += 1;
                return Ok(out);
            }
            out.push(item(self)?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {}
                Some(got) => return Err(self.err(format!("expected ',' or ']', found {got:?}"))),
                None => return Err(self.err("unterminated list")),
            }
        }
    }

    fn string(&mut self) -> Result<String, ParseErrorKind> {
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ ('\'' | '"')) => q,
            Some(got) => return Err(self.err(format!("expected a quoted string, found {got:?}"))),
            None => return Err(self.err("expected a quoted string, found end of input")),
        };
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.src[self.pos..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, e)) => out.push(e),
                    None => break,
                },
                c if c == quote => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                c => out.push(c),
            }
        }
        self.pos = self.src.len();
        Err(self.err("unterminated string"))
    }

    fn finish(&mut self) -> Result<(), ParseErrorKind> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.err("trailing characters after quad list"))
        }
    }
}

fn parse_quad_list(literal: &str, order: ElementOrder) -> Result<Vec<Quad>, ParseErrorKind> {
    let mut reader = LiteralReader { src: literal, pos: 0 };
    let entries = reader.list(|r| r.list(|r| r.string()))?;
    reader.finish()?;

    entries
        .into_iter()
        .enumerate()
        .map(|(index, fields)| {
            let arity = fields.len();
            let fields: [String; 4] = fields.try_into().map_err(|_| ParseErrorKind::Arity { index, arity })?;
            let mut aspect = None;
            let mut category = None;
            let mut opinion = None;
            let mut polarity = None;
            for (kind, value) in order.positions().into_iter().zip(fields) {
                match kind {
                    ElementKind::Aspect => aspect = Some(value),
                    ElementKind::Category => category = Some(value),
                    ElementKind::Opinion => opinion = Some(value),
                    ElementKind::Sentiment => polarity = Some(value.parse::<Polarity>()?),
                }
            }
            // ElementOrder guarantees all four positions are assigned.
            Ok(Quad {
                aspect: aspect.unwrap(),
                category: category.unwrap(),
                opinion: opinion.unwrap(),
                polarity: polarity.unwrap(),
            })
        })
        .collect()
}

/// Parse one raw dataset line into its sentence text and canonical quads.
/// `line_no` is 1-based and only used for error reporting.
pub fn parse_dataset_line(
    line: &str,
    line_no: usize,
    id: impl Into<String>,
    order: ElementOrder,
) -> Result<Example, ParseError> {
    let err = |kind| ParseError { line: line_no, kind };
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let (text, literal) = line
        .split_once(FIELD_SEPARATOR)
        .ok_or_else(|| err(ParseErrorKind::MissingSeparator))?;
    if text.trim().is_empty() {
        return Err(err(ParseErrorKind::EmptyText));
    }
    let quads = parse_quad_list(literal, order).map_err(err)?;
    Ok(Example {
        sentence: Sentence::new(id, text),
        quads,
    })
}

/// Sentence ids assigned at ingest: `<name>-<0-based line index>`.
pub fn sentence_id(name: &str, index: usize) -> String {
    format!("{name}-{index}")
}

/// Parse a whole raw file. Blank lines are skipped but still advance the
/// line counter. All failing lines are collected, not just the first.
pub fn parse_raw<R: BufRead>(
    reader: R,
    name: &str,
    split: Split,
    order: ElementOrder,
    taxonomy: Option<&Taxonomy>,
) -> Result<Dataset, DatasetError> {
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let results: Vec<(usize, Result<Example, ParseError>)> = lines
        .par_iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let parsed = parse_dataset_line(l, i + 1, sentence_id(name, i), order).and_then(|ex| {
                if let Some(tax) = taxonomy {
                    if let Some(q) = ex.quads.iter().find(|q| !tax.contains(&q.category)) {
                        return Err(ParseError {
                            line: i + 1,
                            kind: ParseErrorKind::UnknownCategory(q.category.clone()),
                        });
                    }
                }
                Ok(ex)
            });
            (i, parsed)
        })
        .collect();

    let mut examples = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (_, r) in results {
        match r {
            Ok(e) => examples.push(e),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(DatasetError::Parse(errors));
    }
    Ok(Dataset::new(name, split, examples))
}

/// One line of canonical JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalRecord {
    pub id: String,
    pub text: String,
    pub quads: Vec<Quad>,
}

impl From<&Example> for CanonicalRecord {
    fn from(e: &Example) -> Self {
        CanonicalRecord {
            id: e.sentence.id.clone(),
            text: e.sentence.text.clone(),
            quads: e.quads.clone(),
        }
    }
}

impl From<CanonicalRecord> for Example {
    fn from(r: CanonicalRecord) -> Self {
        Example {
            sentence: Sentence::new(r.id, r.text),
            quads: r.quads,
        }
    }
}

pub fn write_canonical<W: Write>(d: &Dataset, mut out: W) -> std::io::Result<()> {
    for e in &d.examples {
        serde_json::to_writer(&mut out, &CanonicalRecord::from(e))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_canonical<R: BufRead>(reader: R, name: &str, split: Split) -> Result<Dataset, DatasetError> {
    let mut examples = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CanonicalRecord>(&line) {
            Ok(r) if r.text.trim().is_empty() => errors.push(ParseError {
                line: i + 1,
                kind: ParseErrorKind::EmptyText,
            }),
            Ok(r) => examples.push(Example::from(r)),
            Err(e) => errors.push(ParseError {
                line: i + 1,
                kind: ParseErrorKind::Json(e.to_string()),
            }),
        }
    }
    if !errors.is_empty() {
        return Err(DatasetError::Parse(errors));
    }
    let d = Dataset::new(name, split, examples);
    d.check_unique_ids().map_err(|e| DatasetError::Parse(vec![e]))?;
    Ok(d)
}
