use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    MissingSection,
    MalformedXml,
    EmptyField,
    UnknownTag,
    FenceStripped,
    ProseStripped,
    /// A tag matched a canonical name only after case folding.
    CaseFolded,
    /// Pros or cons were given as delimited text and split into items.
    ItemsSplit,
    /// The coefficient text was not a two-decimal number in `[0, 1]`.
    InvalidValue,
}

/// Half-open byte range `[start, end)` into the parser input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ByteSpan {
    pub start: usize,
    pub end: usize,
}

impl ByteSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        ByteSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub span: ByteSpan,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn warning(code: DiagnosticCode, span: ByteSpan, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            severity: Severity::Warning,
            code,
            span,
            message: message.into(),
        }
    }

    pub fn error(code: DiagnosticCode, span: ByteSpan, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            code,
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(
            f,
            "{sev}[{:?}] bytes {}..{}: {}",
            self.code, self.span.start, self.span.end, self.message
        )
    }
}
