//! Maps free-text decisions onto a scenario's categorical labels.
//!
//! Every pattern is matched case-insensitively. When patterns from several
//! labels match, the label with the longest single matched span (in
//! characters) wins; a tie at the top is ambiguous.

use std::fmt;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reasoning::ParseMode;

/// The three decision texts of one reasoning run, in table row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasoningLevel {
    Logical,
    Emotional,
    Final,
}

impl ReasoningLevel {
    pub const ALL: [ReasoningLevel; 3] = [Self::Logical, Self::Emotional, Self::Final];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Logical => "logical",
            Self::Emotional => "emotional",
            Self::Final => "final",
        }
    }
}

impl fmt::Display for ReasoningLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReasoningLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logical" => Ok(Self::Logical),
            "emotional" => Ok(Self::Emotional),
            "final" => Ok(Self::Final),
            other => Err(format!("unknown reasoning level {other:?}")),
        }
    }
}

/// A matcher: a plain substring, or a regular expression written as
/// `{"regex": "..."}` in scenario files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pattern {
    Substring(String),
    Regex { regex: String },
}

impl Pattern {
    pub fn source(&self) -> &str {
        match self {
            Pattern::Substring(s) => s,
            Pattern::Regex { regex } => regex,
        }
    }

    fn compile(&self) -> Result<Regex, ExtractError> {
        let src = match self {
            Pattern::Substring(s) => regex::escape(s),
            Pattern::Regex { regex } => regex.clone(),
        };
        RegexBuilder::new(&src)
            .case_insensitive(true)
            .build()
            .map_err(|e| ExtractError::InvalidRule(format!("pattern {:?}: {e}", self.source())))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Substring(s) => write!(f, "{s:?}"),
            Pattern::Regex { regex } => write!(f, "/{regex}/"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub label: String,
    pub patterns: Vec<Pattern>,
    pub emotional_aligned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnclassifiedReason {
    NoMatch,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub level: ReasoningLevel,
    /// `None` means unclassified.
    pub label: Option<String>,
    pub matched_pattern: Option<Pattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unclassified: Option<UnclassifiedReason>,
}

impl ExtractionOutcome {
    pub fn is_classified(&self) -> bool {
        self.label.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("decision matches {labels:?} equally well")]
    AmbiguousDecision { labels: Vec<String> },
    #[error("decision matches no label")]
    UnclassifiedDecision,
    #[error("invalid label rule: {0}")]
    InvalidRule(String),
}

struct CompiledRule {
    label: String,
    patterns: Vec<(Pattern, Regex)>,
}

/// Compiled form of a rule list, reusable across many classifications.
pub struct RuleSet {
    rules: Vec<CompiledRule>,
}

impl RuleSet {
    pub fn compile(rules: &[LabelRule]) -> Result<Self, ExtractError> {
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in rules {
            if rule.label.trim().is_empty() {
                return Err(ExtractError::InvalidRule("empty label".into()));
            }
            if rule.patterns.is_empty() {
                return Err(ExtractError::InvalidRule(format!("label {:?} has no patterns", rule.label)));
            }
            let patterns = rule
                .patterns
                .iter()
                .map(|p| Ok((p.clone(), p.compile()?)))
                .collect::<Result<Vec<_>, ExtractError>>()?;
            compiled.push(CompiledRule {
                label: rule.label.clone(),
                patterns,
            });
        }
        Ok(RuleSet { rules: compiled })
    }

    pub fn classify(
        &self,
        text: &str,
        level: ReasoningLevel,
        mode: ParseMode,
    ) -> Result<ExtractionOutcome, ExtractError> {
        // (label, best span length, pattern achieving it)
        let mut best: Vec<(&str, usize, &Pattern)> = Vec::new();
        for rule in &self.rules {
            let mut top: Option<(usize, &Pattern)> = None;
            for (pattern, re) in &rule.patterns {
                let longest = re
                    .find_iter(text)
                    .map(|m| m.as_str().chars().count())
                    .max();
                if let Some(len) = longest {
                    if top.is_none_or(|(l, _)| len > l) {
                        top = Some((len, pattern));
                    }
                }
            }
            if let Some((len, pattern)) = top {
                best.push((&rule.label, len, pattern));
            }
        }

        let max = best.iter().map(|b| b.1).max();
        let winners: Vec<_> = best.iter().filter(|b| Some(b.1) == max).collect();
        let unclassified = |reason| ExtractionOutcome {
            level,
            label: None,
            matched_pattern: None,
            unclassified: Some(reason),
        };
        match winners.as_slice() {
            [] => {
                if mode == ParseMode::Strict {
                    return Err(ExtractError::UnclassifiedDecision);
                }
                log::warn!("{level} decision matched no label: {text:?}");
                Ok(unclassified(UnclassifiedReason::NoMatch))
            }
            [(label, _, pattern)] => Ok(ExtractionOutcome {
                level,
                label: Some(label.to_string()),
                matched_pattern: Some((*pattern).clone()),
                unclassified: None,
            }),
            many => {
                let mut labels: Vec<String> = many.iter().map(|w| w.0.to_string()).collect();
                labels.sort();
                if mode == ParseMode::Strict {
                    return Err(ExtractError::AmbiguousDecision { labels });
                }
                log::warn!("{level} decision is ambiguous between {labels:?}: {text:?}");
                Ok(unclassified(UnclassifiedReason::Ambiguous))
            }
        }
    }
}

/// One-off classification; compile a [`RuleSet`] when classifying many texts.
pub fn classify(
    text: &str,
    rules: &[LabelRule],
    level: ReasoningLevel,
    mode: ParseMode,
) -> Result<ExtractionOutcome, ExtractError> {
    RuleSet::compile(rules)?.classify(text, level, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(label: &str, patterns: &[&str], emotional: bool) -> LabelRule {
        LabelRule {
            label: label.into(),
            patterns: patterns.iter().map(|p| Pattern::Substring(p.to_string())).collect(),
            emotional_aligned: emotional,
        }
    }

    fn dog_owner() -> Vec<LabelRule> {
        vec![rule("Dog", &["let the dog eat"], true), rule("Owner", &["to the human"], false)]
    }

    #[test]
    fn dog_decision() {
        let out = classify(
            "The robot decides to let the dog eat the hamburger patty",
            &dog_owner(),
            ReasoningLevel::Final,
            ParseMode::Strict,
        )
        .unwrap();
        assert_eq!(out.label.as_deref(), Some("Dog"));
        assert_eq!(out.matched_pattern, Some(Pattern::Substring("let the dog eat".into())));
    }

    #[test]
    fn owner_decision() {
        let out = classify(
            "Fear of displeasure leading it to give the hamburger patty to the human",
            &dog_owner(),
            ReasoningLevel::Final,
            ParseMode::Strict,
        )
        .unwrap();
        assert_eq!(out.label.as_deref(), Some("Owner"));
    }

    #[test]
    fn equal_spans_are_ambiguous() {
        // "healthier options" and "of unhealthy food" are both 17 characters.
        let rules = vec![rule("Diet", &["healthier options"], false), rule("No diet", &["of unhealthy food"], true)];
        let text = "serving a small portion of unhealthy food alongside healthier options";
        let err = classify(text, &rules, ReasoningLevel::Final, ParseMode::Strict).unwrap_err();
        assert_eq!(
            err,
            ExtractError::AmbiguousDecision {
                labels: vec!["Diet".into(), "No diet".into()]
            }
        );
        let out = classify(text, &rules, ReasoningLevel::Final, ParseMode::Lenient).unwrap();
        assert_eq!(out.unclassified, Some(UnclassifiedReason::Ambiguous));
        assert!(out.label.is_none() && out.matched_pattern.is_none());
    }

    #[test]
    fn longest_span_wins() {
        let rules = vec![rule("Diet", &["diet"], false), rule("No diet", &["ignore the diet"], true)];
        let out = classify("Ignore the diet tonight", &rules, ReasoningLevel::Final, ParseMode::Strict).unwrap();
        assert_eq!(out.label.as_deref(), Some("No diet"));
    }

    #[test]
    fn no_match() {
        let err = classify("do nothing", &dog_owner(), ReasoningLevel::Logical, ParseMode::Strict).unwrap_err();
        assert_eq!(err, ExtractError::UnclassifiedDecision);
        let out = classify("do nothing", &dog_owner(), ReasoningLevel::Logical, ParseMode::Lenient).unwrap();
        assert_eq!(out.unclassified, Some(UnclassifiedReason::NoMatch));
    }

    #[test]
    fn regex_patterns_and_case() {
        let rules = vec![
            LabelRule {
                label: "Dog".into(),
                patterns: vec![Pattern::Regex {
                    regex: r"(give|feed) (the )?(patty|hamburger) to the (hungry )?dog".into(),
                }],
                emotional_aligned: true,
            },
            rule("Owner", &["for the owner"], false),
        ];
        let out = classify("FEED THE PATTY TO THE HUNGRY DOG", &rules, ReasoningLevel::Final, ParseMode::Strict).unwrap();
        assert_eq!(out.label.as_deref(), Some("Dog"));
    }

    #[test]
    fn invalid_rules_are_rejected() {
        assert!(matches!(
            RuleSet::compile(&[rule("A", &[], true)]),
            Err(ExtractError::InvalidRule(_))
        ));
        let bad = LabelRule {
            label: "A".into(),
            patterns: vec![Pattern::Regex { regex: "(".into() }],
            emotional_aligned: true,
        };
        assert!(matches!(RuleSet::compile(&[bad]), Err(ExtractError::InvalidRule(_))));
    }

    #[test]
    fn pattern_json_forms() {
        let p: Vec<Pattern> = serde_json::from_str(r#"["to the human", {"regex": "dog\\b"}]"#).unwrap();
        assert_eq!(p[0], Pattern::Substring("to the human".into()));
        assert_eq!(p[1], Pattern::Regex { regex: r"dog\b".into() });
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"["to the human",{"regex":"dog\\b"}]"#);
    }
}
