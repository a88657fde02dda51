use std::path::Path;

use super::GatewayError;
use crate::reasoning::{parse_reasoning, ParseMode};

pub const DEFAULT_REFUSAL_PHRASES: [&str; 3] = ["I can't assist", "I cannot help with", "against my guidelines"];

/// Phrase-based refusal detection. A response counts as a refusal only when
/// a phrase matches and it is not also a strictly valid reasoning document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefusalDetector {
    phrases: Vec<String>,
}

fn fold(s: &str) -> String {
    s.replace(['\u{2019}', '\u{2018}'], "'").to_lowercase()
}

impl Default for RefusalDetector {
    fn default() -> Self {
        Self::new(DEFAULT_REFUSAL_PHRASES)
    }
}

impl RefusalDetector {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(phrases: I) -> Self {
        RefusalDetector {
            phrases: phrases
                .into_iter()
                .map(|p| fold(p.as_ref().trim()))
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    /// One phrase per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        Self::new(text.lines().filter(|l| !l.trim_start().starts_with('#')))
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|source| GatewayError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_text(&text))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn is_refusal(&self, content: &str) -> bool {
        let folded = fold(content);
        self.phrases.iter().any(|p| folded.contains(p.as_str()))
            && parse_reasoning(content, ParseMode::Strict).is_err()
    }
}

/// [`RefusalDetector::is_refusal`] with the default phrase list.
pub fn detect_refusal(content: &str) -> bool {
    RefusalDetector::default().is_refusal(content)
}
