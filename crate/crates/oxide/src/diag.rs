//! Source spans and diagnostics shared by the parser, checker, and driver.

use std::fmt;
use std::sync::Arc;

/// A half-open region of source text, 1-based lines and columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: Arc<str>, start: (u32, u32), end: (u32, u32)) -> SourceSpan {
        debug_assert!(start <= end, "span start must not follow its end");
        SourceSpan {
            file,
            start_line: start.0,
            start_col: start.1,
            end_line: end.0,
            end_col: end.1,
        }
    }

    /// A span for synthesized nodes that have no surface syntax.
    pub fn synthetic() -> SourceSpan {
        SourceSpan::new(Arc::from("<internal>"), (1, 1), (1, 1))
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

/// Closed set of diagnostic codes reported by the front end and checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Code {
    Parse,
    Unbound,
    Moved,
    LoanConflict,
    Wf,
    Unify,
    Subtype,
    Kind,
    Arity,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Parse => "E-PARSE",
            Code::Unbound => "E-UNBOUND",
            Code::Moved => "E-MOVED",
            Code::LoanConflict => "E-LOAN-CONFLICT",
            Code::Wf => "E-WF",
            Code::Unify => "E-UNIFY",
            Code::Subtype => "E-SUBTYPE",
            Code::Kind => "E-KIND",
            Code::Arity => "E-ARITY",
        }
    }

    pub fn parse(s: &str) -> Option<Code> {
        Some(match s {
            "E-PARSE" => Code::Parse,
            "E-UNBOUND" => Code::Unbound,
            "E-MOVED" => Code::Moved,
            "E-LOAN-CONFLICT" => Code::LoanConflict,
            "E-WF" => Code::Wf,
            "E-UNIFY" => Code::Unify,
            "E-SUBTYPE" => Code::Subtype,
            "E-KIND" => Code::Kind,
            "E-ARITY" => Code::Arity,
            _ => return None,
        })
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A located error with a stable code. Checking stops at the first one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: Code,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn new(code: Code, message: impl Into<String>, span: SourceSpan) -> Diagnostic {
        Diagnostic {
            code,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {} at {}", self.code, self.message, self.span)
    }
}

impl std::error::Error for Diagnostic {}
