//! Source language: lexing, parsing, safety and grounding.

pub mod ast;
mod ground;
mod lexer;
mod parser;

pub use ast::{Diagnostic, Pos, SourceProgram, Span, Statement};
pub use ground::{ground, parse_filter, GroundingResult, Provenance, Subst};
pub use parser::{check_safety, parse};

use crate::error::Result;
use crate::limits::Limits;

/// Parses and grounds a program text.
pub fn load(text: &str, limits: &Limits) -> Result<(SourceProgram, GroundingResult)> {
    let sp = parse(text)?;
    let g = ground(&sp, limits)?;
    Ok((sp, g))
}
