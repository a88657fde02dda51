//! Runs scenarios against providers over a grid of emotion weights and
//! collects the coded decisions into results tables.

mod scenario;
mod sweep;
mod table;
mod transcript;

use std::path::Path;

use thiserror::Error;

use crate::extract::ExtractError;
use crate::gateway::GatewayError;
use crate::prompt::PromptError;
use crate::reasoning::ParseError;

pub use scenario::{load_scenario, parse_scenario, save_scenario, Scenario};
pub use sweep::{run_sweep, run_sweep_with, RunMode, RunPlan, SweepOutput};
pub use table::{assemble_table, ResultsTable, MISSING};
pub use transcript::{read_transcripts, write_transcripts, CellStatus, LabelTriple, ParseReport, Transcript};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema: {0}")]
    Schema(String),
    #[error("invalid run plan: {0}")]
    Plan(String),
    #[error("transcripts come from more than one scenario: {0:?}")]
    MixedScenario(Vec<String>),
    #[error("no transcripts to analyze")]
    EmptyInput,
    #[error("{provider}: {source}")]
    Gateway { provider: String, source: GatewayError },
    #[error("{context}: {source}")]
    Extract { context: String, source: ExtractError },
    #[error("{context}: {source}")]
    Parse { context: String, source: ParseError },
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// I/O and transport failures, as opposed to invalid input.
    pub fn is_io(&self) -> bool {
        match self {
            HarnessError::Io { .. } => true,
            HarnessError::Gateway { source, .. } => !matches!(source, GatewayError::Config(_)),
            _ => false,
        }
    }
}
