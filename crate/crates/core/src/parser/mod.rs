//! Lexing and parsing of LanQ source text.

pub mod ast;
mod grammar;
mod lexer;
mod print;

use thiserror::Error;

pub use grammar::{parse, ParseError};
pub use lexer::{qudit_dimension, tokenize, LexError, Span, Token, TokenKind, KEYWORDS, TENSOR};
pub use print::{expr_string, print_program};

/// Either stage of front-end failure.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex(e) => e.span,
            SyntaxError::Parse(e) => e.span,
        }
    }
}

pub fn parse_source(source: &str) -> Result<ast::SourceProgram, SyntaxError> {
    let toks = tokenize(source)?;
    Ok(parse(&toks)?)
}
