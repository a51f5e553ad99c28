//! Bounded enumeration oracle.
//!
//! Every variable, free or bound, ranges over the same finite box. The
//! answers agree with the unbounded semantics only for formulas whose truth
//! is determined inside the box, so this is a test oracle and not a solver.

use super::formula::Formula;
use super::LogicError;

/// Whether `f` holds for every assignment of its free variables in `[lo, hi]`,
/// with quantifiers also ranging over `[lo, hi]`. Aborts once more than
/// `cap` atoms have been evaluated.
pub fn brute_force_valid(f: &Formula, lo: i64, hi: i64, cap: u64) -> Result<bool, LogicError> {
    enumerate(f, lo, hi, cap, true)
}

/// Whether some assignment in the box satisfies `f`.
pub fn brute_force_satisfiable(f: &Formula, lo: i64, hi: i64, cap: u64) -> Result<bool, LogicError> {
    enumerate(f, lo, hi, cap, false)
}

fn enumerate(f: &Formula, lo: i64, hi: i64, cap: u64, universal: bool) -> Result<bool, LogicError> {
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    let q = if universal {
        Formula::forall(vars, f.clone())
    } else {
        Formula::exists(vars, f.clone())
    };
    let mut steps = 0;
    q.eval_bounded(&mut Vec::new(), Some((lo, hi)), &mut steps, cap)
        .ok_or(LogicError::BudgetExceeded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_semantics() {
        let f = Formula::gt("x", 8).implies(Formula::gt("x", 6));
        assert_eq!(brute_force_valid(&f, -10, 10, 1_000_000), Ok(true));
        let g = Formula::gt("x", "y");
        assert_eq!(brute_force_valid(&g, -3, 3, 1_000_000), Ok(false));
        assert_eq!(brute_force_satisfiable(&g, -3, 3, 1_000_000), Ok(true));
    }

    #[test]
    fn budget_is_enforced() {
        let f = Formula::gt("a", -100).or(Formula::gt("b", "c"));
        assert_eq!(brute_force_valid(&f, -50, 50, 100), Err(LogicError::BudgetExceeded));
    }
}
