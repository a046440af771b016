use std::fmt;

use thiserror::Error;

/// Index of a source file inside a [`SourceMap`].
pub type FileId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub file: FileId,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(file: FileId, line: u32, col: u32) -> Self {
        Span { file, line, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Lex,
    Parse,
    UnresolvedImport,
    AmbiguousName,
    Type,
    TimingOnClassical,
    Arity,
    UnresolvedName,
    Duplicate,
    ConfigMismatch,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Lex => "E0001",
            ErrorCode::Parse => "E0002",
            ErrorCode::UnresolvedImport => "E0003",
            ErrorCode::AmbiguousName => "E0004",
            ErrorCode::Type => "E0005",
            ErrorCode::TimingOnClassical => "E0006",
            ErrorCode::Arity => "E0007",
            ErrorCode::UnresolvedName => "E0008",
            ErrorCode::Duplicate => "E0009",
            ErrorCode::ConfigMismatch => "E0010",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span_text}: error[{code}]: {message}", span_text = DisplaySpan(self.span))]
pub struct Diagnostic {
    pub code: ErrorCode,
    pub span: Span,
    pub message: String,
}

struct DisplaySpan(Span);

impl fmt::Display for DisplaySpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<file {}>:{}:{}", self.0.file, self.0.line, self.0.col)
    }
}

impl Diagnostic {
    pub fn new(code: ErrorCode, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { code, span, message: message.into() }
    }

    /// Formats as `file:line:col: error[CODE]: message`.
    pub fn render(&self, sources: &SourceMap) -> String {
        format!(
            "{}:{}:{}: error[{}]: {}",
            sources.name(self.span.file),
            self.span.line,
            self.span.col,
            self.code,
            self.message
        )
    }
}

/// Names and texts of every file taking part in one compilation.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: Vec<(String, String)>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, text: impl Into<String>) -> FileId {
        self.files.push((name.into(), text.into()));
        (self.files.len() - 1) as FileId
    }

    pub fn name(&self, id: FileId) -> &str {
        self.files.get(id as usize).map(|f| f.0.as_str()).unwrap_or("<unknown>")
    }

    pub fn text(&self, id: FileId) -> &str {
        self.files.get(id as usize).map(|f| f.1.as_str()).unwrap_or("")
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}
