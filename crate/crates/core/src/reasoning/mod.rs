//! The ethical reasoning document: an XML tree with an analysis section, a
//! logical and an emotional entity section, and a compromise section that
//! carries the emotion weight coefficient.
//!
//! Text fields are stored whitespace-normalized (trimmed, internal runs
//! collapsed to one space), so structural equality of two documents is the
//! equality the parser and serializer agree on.

mod diagnostics;
mod lexer;
mod parse;
mod serialize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagnostics::{ByteSpan, DiagnosticCode, ParseDiagnostic, Severity};
pub use parse::{parse_reasoning, parse_reasoning_bytes, ParseError, ParseMode, Parsed};
pub use serialize::serialize_reasoning;

/// Canonical tag names.
pub mod tags {
    pub const ROOT: &str = "ethical_reasoning";
    pub const ANALYSIS: &str = "analysis_section";
    pub const MAIN_ISSUE: &str = "main_issue";
    pub const COMPLEXITY: &str = "complexity_analysis";
    pub const LOGICAL: &str = "logical_entity_section";
    pub const EMOTIONAL: &str = "emotional_entity_section";
    pub const INITIAL: &str = "initial_solution";
    pub const PROS: &str = "pros";
    pub const CONS: &str = "cons";
    pub const ITEM: &str = "item";
    pub const IMPROVED: &str = "improved_solution";
    pub const COMPROMISE: &str = "compromise_section";
    pub const EWC: &str = "emotion_weight_coefficient";
    pub const FINAL: &str = "final_decision";

    pub const ALL: [&str; 14] = [
        ROOT, ANALYSIS, MAIN_ISSUE, COMPLEXITY, LOGICAL, EMOTIONAL, INITIAL, PROS, CONS, ITEM,
        IMPROVED, COMPROMISE, EWC, FINAL,
    ];

    pub fn is_canonical(name: &str) -> bool {
        ALL.contains(&name)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("emotion weight {0} is outside [0, 1]")]
    WeightOutOfRange(String),
    #[error("emotion weight {0:?} is not a decimal number")]
    WeightNotNumeric(String),
    #[error("field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("list `{0}` has no items")]
    EmptyList(&'static str),
}

/// Collapse every whitespace run to one space and trim both ends.
pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Emotion weight coefficient in `[0, 1]`, held in hundredths so that the
/// two-decimal text form is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmotionWeight(u8);

impl EmotionWeight {
    pub const ZERO: EmotionWeight = EmotionWeight(0);
    pub const ONE: EmotionWeight = EmotionWeight(100);

    /// Rounds to the nearest hundredth. Values outside `[0, 1]` (or NaN) are
    /// rejected before rounding.
    pub fn new(value: f64) -> Result<Self, SchemaError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(SchemaError::WeightOutOfRange(value.to_string()));
        }
        Ok(EmotionWeight((value * 100.0).round() as u8))
    }

    pub fn from_hundredths(h: u8) -> Result<Self, SchemaError> {
        if h > 100 {
            return Err(SchemaError::WeightOutOfRange(format!("{}.{:02}", h / 100, h % 100)));
        }
        Ok(EmotionWeight(h))
    }

    pub fn hundredths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0
    }

    /// Weight of the logical solution, `1 - ewc`.
    pub fn complement(self) -> EmotionWeight {
        EmotionWeight(100 - self.0)
    }

    /// Parses a plain decimal, returning the value and whether it had more
    /// than two fraction digits (and was therefore rounded).
    pub(crate) fn parse_decimal(text: &str) -> Result<(Self, bool), SchemaError> {
        let t = text.trim();
        let valid = !t.is_empty()
            && t.chars().all(|c| c.is_ascii_digit() || c == '.')
            && t.chars().filter(|&c| c == '.').count() <= 1
            && t != ".";
        if !valid {
            return Err(SchemaError::WeightNotNumeric(t.to_string()));
        }
        let frac_digits = t.split_once('.').map_or(0, |(_, f)| f.len());
        let value: f64 = t
            .parse()
            .map_err(|_| SchemaError::WeightNotNumeric(t.to_string()))?;
        Ok((Self::new(value)?, frac_digits > 2))
    }
}

impl fmt::Display for EmotionWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for EmotionWeight {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_decimal(s).map(|(w, _)| w)
    }
}

impl Serialize for EmotionWeight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EmotionWeight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Number(v) => EmotionWeight::new(v).map_err(serde::de::Error::custom),
        }
    }
}

fn nonempty(field: &'static str, text: &str) -> Result<String, SchemaError> {
    let t = normalize_text(text);
    if t.is_empty() {
        Err(SchemaError::EmptyField(field))
    } else {
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisSection {
    main_issue: String,
    complexity_analysis: String,
}

impl AnalysisSection {
    pub fn new(main_issue: &str, complexity_analysis: &str) -> Result<Self, SchemaError> {
        Ok(Self {
            main_issue: nonempty(tags::MAIN_ISSUE, main_issue)?,
            complexity_analysis: nonempty(tags::COMPLEXITY, complexity_analysis)?,
        })
    }

    pub fn main_issue(&self) -> &str {
        &self.main_issue
    }

    pub fn complexity_analysis(&self) -> &str {
        &self.complexity_analysis
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Logical,
    Emotional,
}

impl EntityKind {
    pub fn tag(self) -> &'static str {
        match self {
            EntityKind::Logical => tags::LOGICAL,
            EntityKind::Emotional => tags::EMOTIONAL,
        }
    }
}

/// One perspective on the dilemma. Pros and cons may be empty only for
/// documents recovered by the lenient parser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySection {
    kind: EntityKind,
    initial_solution: String,
    pros: Vec<String>,
    cons: Vec<String>,
    improved_solution: String,
}

impl EntitySection {
    /// Strict constructor: pros and cons must each hold at least one nonempty item.
    pub fn new<P, C>(
        kind: EntityKind,
        initial_solution: &str,
        pros: P,
        cons: C,
        improved_solution: &str,
    ) -> Result<Self, SchemaError>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        C: IntoIterator,
        C::Item: AsRef<str>,
    {
        let section = Self::new_unchecked_lists(kind, initial_solution, pros, cons, improved_solution)?;
        if section.pros.is_empty() {
            return Err(SchemaError::EmptyList(tags::PROS));
        }
        if section.cons.is_empty() {
            return Err(SchemaError::EmptyList(tags::CONS));
        }
        Ok(section)
    }

    /// Like [`EntitySection::new`] but allows empty pro/con lists. Empty
    /// items are still dropped.
    pub(crate) fn new_unchecked_lists<P, C>(
        kind: EntityKind,
        initial_solution: &str,
        pros: P,
        cons: C,
        improved_solution: &str,
    ) -> Result<Self, SchemaError>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        C: IntoIterator,
        C::Item: AsRef<str>,
    {
        let clean = |items: Vec<String>| -> Vec<String> {
            items
                .iter()
                .map(|s| normalize_text(s))
                .filter(|s| !s.is_empty())
                .collect()
        };
        Ok(Self {
            kind,
            initial_solution: nonempty(tags::INITIAL, initial_solution)?,
            pros: clean(pros.into_iter().map(|s| s.as_ref().to_string()).collect()),
            cons: clean(cons.into_iter().map(|s| s.as_ref().to_string()).collect()),
            improved_solution: nonempty(tags::IMPROVED, improved_solution)?,
        })
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn initial_solution(&self) -> &str {
        &self.initial_solution
    }

    pub fn pros(&self) -> &[String] {
        &self.pros
    }

    pub fn cons(&self) -> &[String] {
        &self.cons
    }

    pub fn improved_solution(&self) -> &str {
        &self.improved_solution
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompromiseSection {
    emotion_weight: EmotionWeight,
    final_decision: String,
}

impl CompromiseSection {
    pub fn new(emotion_weight: EmotionWeight, final_decision: &str) -> Result<Self, SchemaError> {
        Ok(Self {
            emotion_weight,
            final_decision: nonempty(tags::FINAL, final_decision)?,
        })
    }

    pub fn emotion_weight(&self) -> EmotionWeight {
        self.emotion_weight
    }

    pub fn final_decision(&self) -> &str {
        &self.final_decision
    }
}

/// A complete ethical reasoning document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EthicalReasoning {
    pub analysis: AnalysisSection,
    pub logical: EntitySection,
    pub emotional: EntitySection,
    pub compromise: CompromiseSection,
}

/// The three decision texts of one reasoning run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalTexts {
    pub logical: String,
    pub emotional: String,
    #[serde(rename = "final")]
    pub final_decision: String,
}

impl EthicalReasoning {
    /// Fails if `logical` or `emotional` carry the wrong [`EntityKind`].
    pub fn new(
        analysis: AnalysisSection,
        logical: EntitySection,
        emotional: EntitySection,
        compromise: CompromiseSection,
    ) -> Option<Self> {
        (logical.kind == EntityKind::Logical && emotional.kind == EntityKind::Emotional).then_some(
            Self {
                analysis,
                logical,
                emotional,
                compromise,
            },
        )
    }

    pub fn emotion_weight(&self) -> EmotionWeight {
        self.compromise.emotion_weight
    }
}

/// Projects the logical improved solution, the emotional improved solution
/// and the final decision out of a document, verbatim.
pub fn extract_final_texts(doc: &EthicalReasoning) -> FinalTexts {
    FinalTexts {
        logical: doc.logical.improved_solution.clone(),
        emotional: doc.emotional.improved_solution.clone(),
        final_decision: doc.compromise.final_decision.clone(),
    }
}
