pub mod ast;
#[cfg(feature = "gen")]
pub mod gen;
pub mod hs;
pub mod logic;
pub mod parser;
pub mod repair;
pub mod session;
pub mod ts;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Ast(#[from] ast::AstError),
    #[error(transparent)]
    Logic(#[from] logic::LogicError),
}
