//! Front end in one call: parse, lower and type check.

use thiserror::Error;

use crate::internal::{lower_with, Builtins, LowerError, MethodContext};
use crate::parser::{parse_source, SyntaxError};
use crate::typing::{check_program, TypeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

impl LoadError {
    /// Diagnostic prefixed with the file name.
    pub fn render(&self, file: &str) -> String {
        match self {
            LoadError::Type(e) => e.render(file),
            e => format!("{file}:{e}"),
        }
    }
}

/// Parses and lowers without type checking.
pub fn lower_source(source: &str, builtins: Builtins) -> Result<MethodContext, LoadError> {
    let ast = parse_source(source)?;
    Ok(lower_with(&ast, builtins)?)
}

/// Parses, lowers and type checks with the default builtins.
pub fn load(source: &str) -> Result<MethodContext, LoadError> {
    load_with(source, Builtins::default())
}

pub fn load_with(source: &str, builtins: Builtins) -> Result<MethodContext, LoadError> {
    let ctx = lower_source(source, builtins)?;
    check_program(&ctx)?;
    Ok(ctx)
}
