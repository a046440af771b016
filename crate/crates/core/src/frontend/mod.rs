//! Lexing, parsing, linking and type checking of Quingo sources.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod resolve;
pub mod typeck;

use std::path::PathBuf;

use thiserror::Error;

pub use diag::{Diagnostic, ErrorCode, SourceMap, Span};
pub use resolve::{load_program, FsProvider, MemProvider, Program, SourceProvider};
pub use typeck::{typecheck, NameRef, TypedProgram};

use crate::platform::PlatformConfig;

/// A frontend failure with its rendered `file:line:col: error[CODE]: msg`.
#[derive(Debug, Clone, Error)]
#[error("{rendered}")]
pub struct FrontendError {
    pub diagnostic: Diagnostic,
    pub rendered: String,
}

impl FrontendError {
    pub fn code(&self) -> ErrorCode {
        self.diagnostic.code
    }

    fn new(d: Diagnostic, sources: &SourceMap) -> Self {
        FrontendError { rendered: d.render(sources), diagnostic: d }
    }
}

/// Root files plus the directories imports are searched in.
#[derive(Debug, Clone, Default)]
pub struct CompileInput {
    pub roots: Vec<(String, String)>,
    pub search_paths: Vec<PathBuf>,
}

/// Loads, links and type-checks. `entry` is a qualified operation name.
pub fn check(
    input: &CompileInput,
    provider: &dyn SourceProvider,
    config: &PlatformConfig,
    entry: Option<&str>,
) -> Result<TypedProgram, FrontendError> {
    let program = load_program(&input.roots, &input.search_paths, provider, Some(&config.package))
        .map_err(|(d, s)| FrontendError::new(d, &s))?;
    typecheck(program, config, entry).map_err(|(d, s)| FrontendError::new(d, &s))
}
