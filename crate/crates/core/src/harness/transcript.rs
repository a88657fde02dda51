use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::extract::{ExtractionOutcome, ReasoningLevel};
use crate::prompt::PromptBundle;
use crate::reasoning::{EmotionWeight, FinalTexts, ParseDiagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// A response arrived and parsed; individual labels may still be unclassified.
    Ok,
    Refusal,
    ParseError,
    TransportError,
    HttpError,
    AuthError,
    FixtureMissing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub ok: bool,
    pub diagnostics: Vec<ParseDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTriple {
    pub logical: ExtractionOutcome,
    pub emotional: ExtractionOutcome,
    #[serde(rename = "final")]
    pub final_decision: ExtractionOutcome,
}

impl LabelTriple {
    pub fn get(&self, level: ReasoningLevel) -> &ExtractionOutcome {
        match level {
            ReasoningLevel::Logical => &self.logical,
            ReasoningLevel::Emotional => &self.emotional,
            ReasoningLevel::Final => &self.final_decision,
        }
    }
}

/// Everything recorded about one provider call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub run_id: String,
    pub scenario_id: String,
    pub provider: String,
    pub model_id: String,
    pub ewc: EmotionWeight,
    pub trial: u32,
    pub timestamp: String,
    pub prompt: PromptBundle,
    pub raw_response: Option<String>,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub parse: Option<ParseReport>,
    pub decisions: Option<FinalTexts>,
    pub labels: Option<LabelTriple>,
}

impl Transcript {
    /// The classified label at `level`, if any.
    pub fn label(&self, level: ReasoningLevel) -> Option<&str> {
        if self.status != CellStatus::Ok {
            return None;
        }
        self.labels.as_ref()?.get(level).label.as_deref()
    }

    pub fn is_consistent(&self) -> bool {
        let parsed = self.parse.as_ref().is_some_and(|p| p.ok);
        parsed == self.labels.is_some() && parsed == self.decisions.is_some()
    }
}

/// Writes one JSON object per line, replacing any existing file.
pub fn write_transcripts(path: &Path, transcripts: &[Transcript]) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for t in transcripts {
        let line = serde_json::to_string(t).expect("transcript serializes");
        writeln!(out, "{line}").map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_transcripts(path: &Path) -> Result<Vec<Transcript>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| HarnessError::Schema(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
