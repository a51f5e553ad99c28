//! The solver interface used by the checkers and repair procedures.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::cooper;
use super::formula::Formula;
use super::smtlib::SmtLibProcess;
use super::LogicError;

/// Decides validity and satisfiability of closed-under-free-variables
/// formulas of linear integer arithmetic.
pub trait Solver: Send + Sync {
    fn name(&self) -> &str;

    fn is_valid(&self, f: &Formula) -> Result<bool, LogicError>;

    fn is_satisfiable(&self, f: &Formula) -> Result<bool, LogicError> {
        self.is_valid(&f.clone().not()).map(|v| !v)
    }

    /// `hyp |= concl`. Conjuncts of `hyp` sharing no variable (even
    /// transitively) with `concl` are split off: they only matter when they
    /// are unsatisfiable on their own.
    fn entails(&self, hyp: &Formula, concl: &Formula) -> Result<bool, LogicError> {
        let (relevant, rest) = slice(hyp, concl);
        if self.is_valid(&relevant.implies(concl.clone()))? {
            return Ok(true);
        }
        if rest == Formula::True {
            return Ok(false);
        }
        Ok(!self.is_satisfiable(&rest)?)
    }
}

/// Splits `hyp` into the conjuncts connected to the variables of `concl` and
/// the remainder.
pub fn slice(hyp: &Formula, concl: &Formula) -> (Formula, Formula) {
    let parts: Vec<(&Formula, BTreeSet<String>)> =
        hyp.conjuncts().into_iter().map(|c| (c, c.free_vars())).collect();
    let mut reach = concl.free_vars();
    let mut taken = vec![false; parts.len()];
    loop {
        let mut grew = false;
        for (i, (_, vs)) in parts.iter().enumerate() {
            if !taken[i] && !vs.is_empty() && vs.iter().any(|v| reach.contains(v)) {
                taken[i] = true;
                reach.extend(vs.iter().cloned());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let relevant = parts.iter().zip(&taken).filter(|(_, t)| **t).map(|((c, _), _)| (*c).clone());
    let rest = parts.iter().zip(&taken).filter(|(_, t)| !**t).map(|((c, _), _)| (*c).clone());
    (Formula::conjunction_skip_true(relevant), Formula::conjunction_skip_true(rest))
}

/// The built-in decision procedure with a per-query deadline and a result
/// cache.
pub struct BuiltinSolver {
    timeout: Duration,
    cache: Mutex<HashMap<Formula, bool>>,
}

impl BuiltinSolver {
    pub fn new(timeout: Duration) -> Self {
        BuiltinSolver { timeout, cache: Mutex::new(HashMap::new()) }
    }
}

impl Default for BuiltinSolver {
    fn default() -> Self {
        BuiltinSolver::new(Duration::from_millis(DEFAULT_TIMEOUT_MS))
    }
}

impl Solver for BuiltinSolver {
    fn name(&self) -> &str {
        "builtin"
    }

    fn is_valid(&self, f: &Formula) -> Result<bool, LogicError> {
        if let Some(hit) = self.cache.lock().unwrap().get(f) {
            return Ok(*hit);
        }
        let answer = cooper::is_valid(f, Some(Instant::now() + self.timeout))?;
        self.cache.lock().unwrap().insert(f.clone(), answer);
        Ok(answer)
    }

    fn is_satisfiable(&self, f: &Formula) -> Result<bool, LogicError> {
        self.is_valid(&f.clone().not()).map(|v| !v)
    }
}

pub const DEFAULT_TIMEOUT_MS: u64 = 5_000;

/// Solver selection, typically read from the `[solver]` table of a config
/// file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// External SMT-LIB solver command line, e.g. `["z3", "-in"]`. The
    /// built-in procedure is used when absent.
    pub cmd: Option<Vec<String>>,
    pub timeout_ms: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { cmd: None, timeout_ms: DEFAULT_TIMEOUT_MS }
    }
}

impl SolverConfig {
    pub fn build(&self) -> Arc<dyn Solver> {
        let timeout = Duration::from_millis(self.timeout_ms);
        match &self.cmd {
            Some(argv) if !argv.is_empty() => Arc::new(SmtLibProcess::new(argv.clone(), timeout)),
            _ => Arc::new(BuiltinSolver::new(timeout)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slicing_keeps_connected_conjuncts() {
        let hyp = Formula::gt("a", 0).and(Formula::gt("b", "c")).and(Formula::gt("c", "x"));
        let (rel, rest) = slice(&hyp, &Formula::gt("x", 0));
        assert_eq!(rel, Formula::gt("b", "c").and(Formula::gt("c", "x")));
        assert_eq!(rest, Formula::gt("a", 0));
    }

    #[test]
    fn entailment_with_inconsistent_side_condition() {
        let s = BuiltinSolver::default();
        let hyp = Formula::gt("a", 0).and(Formula::lt("a", 0));
        assert!(s.entails(&hyp, &Formula::gt("x", 5)).unwrap());
        assert!(!s.entails(&Formula::gt("a", 0), &Formula::gt("x", 5)).unwrap());
        assert!(s.entails(&Formula::gt("x", 8), &Formula::gt("x", 6)).unwrap());
    }
}
