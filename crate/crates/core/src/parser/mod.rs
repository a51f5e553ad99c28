//! Concrete syntax for global assertions.
//!
//! ```text
//! G ::= I . G | I | choice P -> P { Arm ; ... ; Arm } | rec t<E,...>(V | F) . G | t<E,...> | end
//! I ::= P -> P : (V | F)
//! Arm ::= {F} label : G
//! ```
//!
//! Formulas use `=>`, `||`, `&&`, `!`, `exists x y. F`, `forall x. F`,
//! comparisons (`=`, `!=`, `<`, `<=`, `>`, `>=`, chains allowed) and
//! divisibility `k | E`. Line comments start with `//`.

mod grammar;
mod lexer;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{check_well_formed, Defect, GlobalAssertion};
use crate::logic::Formula;

pub use printer::print;

/// Byte range plus the 1-based line and column where it starts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan { end: other.end.max(self.end), ..self }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub message: String,
}

/// A parsed assertion with the source span of every tree node, indexed by
/// preorder position (`spans[id - 1]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parsed {
    pub assertion: GlobalAssertion,
    pub spans: Vec<SourceSpan>,
}

impl Parsed {
    pub fn span(&self, id: crate::ast::NodeId) -> Option<SourceSpan> {
        id.0.checked_sub(1).and_then(|i| self.spans.get(i).copied())
    }

    /// Well-formedness defects, each located in the source.
    pub fn defects(&self) -> Vec<(Defect, SourceSpan)> {
        check_well_formed(&self.assertion)
            .into_iter()
            .map(|d| {
                let span = self.span(d.node()).unwrap_or_default();
                (d, span)
            })
            .collect()
    }
}

pub fn parse(src: &str) -> Result<Parsed, SyntaxError> {
    let tokens = lexer::tokenize(src)?;
    grammar::Parser::new(tokens).assertion()
}

pub fn parse_formula(src: &str) -> Result<Formula, SyntaxError> {
    let tokens = lexer::tokenize(src)?;
    grammar::Parser::new(tokens).standalone_formula()
}
