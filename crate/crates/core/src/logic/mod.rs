//! The predicate language and its decision procedures.

pub mod brute;
pub mod cooper;
pub mod formula;
pub mod smtlib;
pub mod solver;
pub mod subst;

pub use formula::{CmpOp, Expr, Formula};
pub use solver::{BuiltinSolver, Solver, SolverConfig, DEFAULT_TIMEOUT_MS};
pub use subst::Substitution;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("solver timed out")]
    Timeout,
    #[error("intermediate formula exceeded the size limit")]
    TooLarge,
    #[error("integer overflow in the decision procedure")]
    Overflow,
    #[error("substitution would capture bound variable `{0}`")]
    Capture(String),
    #[error("enumeration budget exhausted")]
    BudgetExceeded,
    #[error("external solver: {0}")]
    External(String),
}
