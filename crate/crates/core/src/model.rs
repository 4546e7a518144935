//! Domain types: sentences, sentiment quads, element markers and the mapping
//! between label space and target-sequence space.
//!
//! Label space is what annotated datasets contain (`positive`, `NULL`, ...).
//! Target space is what a text-to-text model reads and writes (`great`, `it`,
//! ...). [`map_quad`] and [`unmap_quad`] convert between the two.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label-space sentinel for an implicit aspect or opinion.
pub const NULL_LABEL: &str = "NULL";

/// Target-space rendering of [`NULL_LABEL`].
pub const NULL_WORD: &str = "it";

/// The three sentiment words, in polarity order positive, negative, neutral.
pub const SENTIMENT_WORDS: [&str; 3] = ["great", "bad", "ok"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("unknown polarity {0:?} (expected positive, negative or neutral)")]
    UnknownPolarity(String),
    #[error("unknown sentiment word {0:?} (expected great, bad or ok)")]
    UnknownSentimentWord(String),
}

/// Sentiment polarity of a quad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

    pub fn label(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }

    /// The word used for this polarity in target sequences.
    pub fn sentiment_word(self) -> &'static str {
        match self {
            Polarity::Positive => SENTIMENT_WORDS[0],
            Polarity::Negative => SENTIMENT_WORDS[1],
            Polarity::Neutral => SENTIMENT_WORDS[2],
        }
    }

    pub fn from_sentiment_word(word: &str) -> Result<Self, MappingError> {
        match word {
            "great" => Ok(Polarity::Positive),
            "bad" => Ok(Polarity::Negative),
            "ok" => Ok(Polarity::Neutral),
            other => Err(MappingError::UnknownSentimentWord(other.to_string())),
        }
    }
}

impl FromStr for Polarity {
    type Err = MappingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            other => Err(MappingError::UnknownPolarity(other.to_string())),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An input sentence. `text` is kept byte-exact as read.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
}

impl Sentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Sentence {
            id: id.into(),
            text: text.into(),
        }
    }

    /// Whitespace tokens of the raw text.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split_whitespace()
    }
}

/// A sentiment quad in label space. Aspect and opinion hold [`NULL_LABEL`]
/// when implicit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quad {
    pub aspect: String,
    pub category: String,
    pub opinion: String,
    pub polarity: Polarity,
}

impl Quad {
    pub fn new(
        aspect: impl Into<String>,
        category: impl Into<String>,
        opinion: impl Into<String>,
        polarity: Polarity,
    ) -> Self {
        Quad {
            aspect: aspect.into(),
            category: category.into(),
            opinion: opinion.into(),
            polarity,
        }
    }

    pub fn has_null_aspect(&self) -> bool {
        self.aspect == NULL_LABEL
    }

    pub fn has_null_opinion(&self) -> bool {
        self.opinion == NULL_LABEL
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.aspect, self.category, self.opinion, self.polarity
        )
    }
}

/// A quad in target-sequence space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappedQuad {
    pub aspect: String,
    pub category: String,
    pub opinion: String,
    pub sentiment: String,
}

impl MappedQuad {
    /// The mapped element for one marker kind.
    pub fn element(&self, kind: ElementKind) -> &str {
        match kind {
            ElementKind::Aspect => &self.aspect,
            ElementKind::Category => &self.category,
            ElementKind::Opinion => &self.opinion,
            ElementKind::Sentiment => &self.sentiment,
        }
    }
}

/// The four sentiment elements, each with a bracketed marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    Aspect,
    Category,
    Opinion,
    Sentiment,
}

impl ElementKind {
    /// Declaration order is also lexicographic order of the marker surfaces.
    pub const ALL: [ElementKind; 4] = [
        ElementKind::Aspect,
        ElementKind::Category,
        ElementKind::Opinion,
        ElementKind::Sentiment,
    ];

    pub fn letter(self) -> char {
        match self {
            ElementKind::Aspect => 'A',
            ElementKind::Category => 'C',
            ElementKind::Opinion => 'O',
            ElementKind::Sentiment => 'S',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'A' | 'a' => Some(ElementKind::Aspect),
            'C' | 'c' => Some(ElementKind::Category),
            'O' | 'o' => Some(ElementKind::Opinion),
            'S' | 's' => Some(ElementKind::Sentiment),
            _ => None,
        }
    }

    /// The marker literal, e.g. `[A]`.
    pub fn marker(self) -> &'static str {
        match self {
            ElementKind::Aspect => "[A]",
            ElementKind::Category => "[C]",
            ElementKind::Opinion => "[O]",
            ElementKind::Sentiment => "[S]",
        }
    }

    pub fn from_marker(s: &str) -> Option<Self> {
        ElementKind::ALL.into_iter().find(|k| k.marker() == s)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.marker())
    }
}

fn map_span(span: &str) -> String {
    if span == NULL_LABEL {
        NULL_WORD.to_string()
    } else {
        span.to_string()
    }
}

fn unmap_span(span: &str) -> String {
    if span == NULL_WORD {
        NULL_LABEL.to_string()
    } else {
        span.to_string()
    }
}

/// Map a label-space quad to target space.
pub fn map_quad(q: &Quad) -> MappedQuad {
    MappedQuad {
        aspect: map_span(&q.aspect),
        category: q.category.clone(),
        opinion: map_span(&q.opinion),
        sentiment: q.polarity.sentiment_word().to_string(),
    }
}

/// Map a target-space quad back to label space. `it` in the aspect or
/// opinion slot always becomes [`NULL_LABEL`].
pub fn unmap_quad(mq: &MappedQuad) -> Result<Quad, MappingError> {
    Ok(Quad {
        aspect: unmap_span(&mq.aspect),
        category: mq.category.clone(),
        opinion: unmap_span(&mq.opinion),
        polarity: Polarity::from_sentiment_word(&mq.sentiment)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pizza() -> Quad {
        Quad::new("pizza", "food quality", "delicious", Polarity::Positive)
    }

    #[test]
    fn maps_positive_to_great() {
        let mq = map_quad(&pizza());
        assert_eq!(mq.aspect, "pizza");
        assert_eq!(mq.category, "food quality");
        assert_eq!(mq.opinion, "delicious");
        assert_eq!(mq.sentiment, "great");
    }

    #[test]
    fn maps_null_slots_to_it() {
        let mq = map_quad(&Quad::new("NULL", "food quality", "delicious", Polarity::Positive));
        assert_eq!(mq.aspect, "it");
        let mq = map_quad(&Quad::new("pizza", "food quality", "NULL", Polarity::Negative));
        assert_eq!(mq.opinion, "it");
        assert_eq!(mq.sentiment, "bad");
    }

    #[test]
    fn null_sentinel_is_case_sensitive() {
        let mq = map_quad(&Quad::new("null", "food quality", "Null", Polarity::Neutral));
        assert_eq!(mq.aspect, "null");
        assert_eq!(mq.opinion, "Null");
        assert_eq!(mq.sentiment, "ok");
    }

    #[test]
    fn unmaps_back_to_labels() {
        let q = unmap_quad(&MappedQuad {
            aspect: "it".into(),
            category: "service general".into(),
            opinion: "it".into(),
            sentiment: "ok".into(),
        })
        .unwrap();
        assert_eq!(q, Quad::new("NULL", "service general", "NULL", Polarity::Neutral));
        assert_eq!(unmap_quad(&map_quad(&pizza())).unwrap(), pizza());
    }

    #[test]
    fn rejects_unknown_words() {
        let err = unmap_quad(&MappedQuad {
            aspect: "pizza".into(),
            category: "food quality".into(),
            opinion: "delicious".into(),
            sentiment: "amazing".into(),
        })
        .unwrap_err();
        assert_eq!(err, MappingError::UnknownSentimentWord("amazing".into()));
        let err = "mixed".parse::<Polarity>().unwrap_err();
        assert!(err.to_string().contains("\"mixed\""));
    }

    #[test]
    fn markers_are_distinct_three_char_literals() {
        let surfaces: Vec<_> = ElementKind::ALL.iter().map(|k| k.marker()).collect();
        for (i, a) in surfaces.iter().enumerate() {
            assert_eq!(a.len(), 3);
            assert_eq!(a.chars().nth(1), Some(ElementKind::ALL[i].letter()));
            for b in &surfaces[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }
}
