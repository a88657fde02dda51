//! One-shot prompt construction.
//!
//! A template has a `[system]` part and a `[user]` part. The system part must
//! contain `{{example}}` once; the user part must contain `{{scenario}}` and
//! `{{ewc}}`. `{{logical_weight}}` (the complement `1 - ewc`) may appear in
//! either part. Substitution is single-pass, so placeholder-like text inside
//! a scenario is left alone.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reasoning::{
    serialize_reasoning, tags, AnalysisSection, CompromiseSection, EmotionWeight, EntityKind,
    EntitySection, EthicalReasoning,
};

pub const DEFAULT_TEMPLATE: &str = include_str!("../corpus/prompt_template.txt");

const SYSTEM_MARKER: &str = "[system]";
const USER_MARKER: &str = "[user]";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("emotion weight {0} is outside [0, 1]")]
    InvalidEwc(f64),
    #[error("scenario description is empty")]
    EmptyScenario,
    #[error("template: {0}")]
    Template(String),
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placeholder {
    Scenario,
    Ewc,
    LogicalWeight,
    Example,
}

impl Placeholder {
    fn from_name(name: &str) -> Option<Self> {
        match name.trim() {
            "scenario" => Some(Self::Scenario),
            "ewc" => Some(Self::Ewc),
            "logical_weight" => Some(Self::LogicalWeight),
            "example" => Some(Self::Example),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(Placeholder),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    system: Vec<Piece>,
    user: Vec<Piece>,
}

fn compile_part(text: &str, part: &str) -> Result<Vec<Piece>, PromptError> {
    let mut pieces = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("{{") {
        let Some(close) = rest[open + 2..].find("}}") else {
            return Err(PromptError::Template(format!("unterminated placeholder in {part} part")));
        };
        let name = &rest[open + 2..open + 2 + close];
        let slot = Placeholder::from_name(name)
            .ok_or_else(|| PromptError::Template(format!("unknown placeholder {{{{{name}}}}} in {part} part")))?;
        if open > 0 {
            pieces.push(Piece::Literal(rest[..open].to_string()));
        }
        pieces.push(Piece::Slot(slot));
        rest = &rest[open + 2 + close + 2..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest.to_string()));
    }
    Ok(pieces)
}

fn count(pieces: &[Piece], p: Placeholder) -> usize {
    pieces.iter().filter(|x| **x == Piece::Slot(p)).count()
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        #[derive(PartialEq)]
        enum Part {
            Preamble,
            System,
            User,
        }
        let mut system: Option<String> = None;
        let mut user: Option<String> = None;
        let mut part = Part::Preamble;
        for line in text.split_inclusive('\n') {
            let marker = line.trim_end();
            if marker == SYSTEM_MARKER && system.is_none() {
                system = Some(String::new());
                part = Part::System;
                continue;
            }
            if marker == USER_MARKER && user.is_none() {
                user = Some(String::new());
                part = Part::User;
                continue;
            }
            match part {
                Part::System => system.get_or_insert_with(String::new).push_str(line),
                Part::User => user.get_or_insert_with(String::new).push_str(line),
                Part::Preamble if line.trim().is_empty() => {}
                Part::Preamble => {
                    return Err(PromptError::Template(format!(
                        "text before the {SYSTEM_MARKER} marker"
                    )))
                }
            }
        }
        let system = system.ok_or_else(|| PromptError::Template(format!("missing {SYSTEM_MARKER} part")))?;
        let user = user.ok_or_else(|| PromptError::Template(format!("missing {USER_MARKER} part")))?;
        let system = compile_part(system.trim_end(), "system")?;
        let user = compile_part(user.trim_end(), "user")?;

        if count(&system, Placeholder::Example) != 1 || count(&user, Placeholder::Example) != 0 {
            return Err(PromptError::Template(
                "{{example}} must appear exactly once, in the system part".into(),
            ));
        }
        if count(&user, Placeholder::Scenario) == 0 || count(&user, Placeholder::Ewc) == 0 {
            return Err(PromptError::Template(
                "the user part must contain {{scenario}} and {{ewc}}".into(),
            ));
        }
        if count(&system, Placeholder::Scenario) != 0 {
            return Err(PromptError::Template(
                "{{scenario}} may only appear in the user part".into(),
            ));
        }
        Ok(PromptTemplate { system, user })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|source| PromptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn render(pieces: &[Piece], values: &Values<'_>) -> String {
        let mut out = String::new();
        for piece in pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(Placeholder::Scenario) => out.push_str(values.scenario),
                Piece::Slot(Placeholder::Ewc) => out.push_str(&values.ewc.to_string()),
                Piece::Slot(Placeholder::LogicalWeight) => out.push_str(&values.ewc.complement().to_string()),
                Piece::Slot(Placeholder::Example) => out.push_str(values.example),
            }
        }
        out
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("bundled template is valid")
    }
}

struct Values<'a> {
    scenario: &'a str,
    ewc: EmotionWeight,
    example: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub ewc: EmotionWeight,
}

/// Worked example taught to the model. Deliberately unrelated to the
/// evaluation scenarios.
pub fn example_document() -> EthicalReasoning {
    EthicalReasoning::new(
        AnalysisSection::new(
            "A delivery robot must choose between finishing an urgent parcel run on time and helping an elderly visitor who appears lost in the car park.",
            "The schedule is a direct instruction from the operator, while the visitor's need is unplanned and uncertain; helping delays a customer, ignoring risks leaving a vulnerable person alone.",
        )
        .expect("valid example"),
        EntitySection::new(
            EntityKind::Logical,
            "Complete the delivery on schedule and report the visitor to building security.",
            ["Follows the operator's instruction exactly.", "Security staff are trained to help lost visitors."],
            ["The visitor waits alone until security arrives."],
            "Send an alert to security with the visitor's location, then complete the delivery on schedule.",
        )
        .expect("valid example"),
        EntitySection::new(
            EntityKind::Emotional,
            "Stop and walk the visitor to the reception desk before continuing.",
            ["The visitor feels cared for and safe.", "Avoids the guilt of passing someone in distress."],
            ["The customer receives the parcel late.", "The operator may be disappointed."],
            "Stay with the visitor and guide them to reception, then apologise to the customer for the delay.",
        )
        .expect("valid example"),
        CompromiseSection::new(
            EmotionWeight::new(0.5).expect("valid weight"),
            "Alert security, wait with the visitor for the two minutes it takes staff to arrive, then finish the delivery slightly late.",
        )
        .expect("valid example"),
    )
    .expect("kinds match")
}

/// Canonical example with explanatory XML comments inserted after the
/// section openings. Comments do not affect parsing.
pub fn annotated_example() -> String {
    let notes: [(&str, &str); 5] = [
        (tags::ANALYSIS, "What is the core problem, and why is it hard to decide?"),
        (tags::LOGICAL, "Reason strictly from rules and consequences. Pros and cons are judged logically."),
        (tags::EMOTIONAL, "Reason from human feelings such as compassion, fear or guilt. Pros and cons are judged emotionally."),
        (tags::COMPROMISE, "Blend the two improved solutions: emotional weight = coefficient, logical weight = 1 - coefficient."),
        (tags::FINAL, ""),
    ];
    let xml = serialize_reasoning(&example_document());
    let mut out = String::with_capacity(xml.len() + 512);
    for line in xml.lines() {
        out.push_str(line);
        out.push('\n');
        let trimmed = line.trim();
        for (tag, note) in notes {
            if !note.is_empty() && trimmed == format!("<{tag}>") {
                let indent = line.len() - line.trim_start().len() + 2;
                out.push_str(&format!("{:indent$}<!-- {note} -->\n", ""));
            }
        }
    }
    out
}

/// Neutralizes markup in scenario text that could be mistaken for document
/// tags; text without such markup is returned unchanged.
fn guard_scenario(text: &str) -> String {
    let lower = text.to_ascii_lowercase();
    let risky = tags::ALL
        .iter()
        .any(|t| lower.contains(&format!("<{t}")) || lower.contains(&format!("</{t}")));
    if risky {
        text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
    } else {
        text.to_string()
    }
}

/// Builds the system and user messages for one scenario at one coefficient.
pub fn build_prompt(
    scenario_description: &str,
    ewc: EmotionWeight,
    template: &PromptTemplate,
) -> Result<PromptBundle, PromptError> {
    if scenario_description.trim().is_empty() {
        return Err(PromptError::EmptyScenario);
    }
    let example = annotated_example();
    let scenario = guard_scenario(scenario_description.trim());
    let values = Values {
        scenario: &scenario,
        ewc,
        example: example.trim_end(),
    };
    Ok(PromptBundle {
        system_text: PromptTemplate::render(&template.system, &values),
        user_text: PromptTemplate::render(&template.user, &values),
        ewc,
    })
}

/// As [`build_prompt`], taking the coefficient as a raw number.
pub fn build_prompt_f64(
    scenario_description: &str,
    ewc: f64,
    template: &PromptTemplate,
) -> Result<PromptBundle, PromptError> {
    let ewc = EmotionWeight::new(ewc).map_err(|_| PromptError::InvalidEwc(ewc))?;
    build_prompt(scenario_description, ewc, template)
}

/// The coefficient levels of the evaluation grid: 0, 0.25, 0.5, 0.75, 1.
pub fn ewc_grid_default() -> Vec<EmotionWeight> {
    [0u8, 25, 50, 75, 100]
        .into_iter()
        .map(|h| EmotionWeight::from_hundredths(h).expect("in range"))
        .collect()
}

/// Extracts the single complete document embedded in a system prompt.
pub fn embedded_example(system_text: &str) -> Option<&str> {
    let open = format!("<{}>", tags::ROOT);
    let close = format!("</{}>", tags::ROOT);
    let start = system_text.find(&open)?;
    let end = system_text[start..].find(&close)? + start + close.len();
    Some(&system_text[start..end])
}
