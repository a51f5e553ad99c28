//! Temporal satisfiability: whatever admissible values earlier parties
//! choose, later predicates, branch guards and recursion invariants remain
//! satisfiable. The lifting repair (Φ3) lives in [`lift`], failure
//! explanations in [`diagnose`].

mod diagnose;
mod lift;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use diagnose::{conflict_diagnostics, ConflictReport, LiftAttempt, VarOrigin};
pub use lift::{
    branch_repair_options, build, build_plan, in_conflict, lift_plans, phi3, rewrite, split, ts_res, BranchOption,
    BranchStrategy, BuildRefusal, Insertion, LiftPlan,
};

use crate::ast::{AssertionTree, GlobalAssertion, Label, NodeId};
use crate::logic::{Formula, LogicError, Solver, Substitution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TsKind {
    Interaction,
    Branching,
    RecDef,
    RecCall,
}

impl fmt::Display for TsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TsKind::Interaction => "interaction",
            TsKind::Branching => "branching",
            TsKind::RecDef => "recDef",
            TsKind::RecCall => "recCall",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsViolation {
    pub node: NodeId,
    pub kind: TsKind,
    /// Conjunction of the predicates above the node.
    pub context: Formula,
    /// What the context fails to entail.
    pub obligation: Formula,
}

/// The invariant of the definition bound to a call, instantiated at the
/// call's arguments.
pub(crate) fn call_instance(t: &AssertionTree, call: NodeId) -> Option<Formula> {
    let Label::RecCall { args, .. } = t.label(call) else {
        return None;
    };
    let def = t.binder(call)?;
    let Label::RecDef { params, invariant, .. } = t.label(def) else {
        return None;
    };
    Some(Substitution::zip(params, args).apply(invariant))
}

/// The side condition the context of `n` must entail, with its kind:
/// `∃vars.A` for interactions, the disjunction of the guards for a
/// branching (checked at the selector), and the invariant instantiated at
/// the initial values or call arguments for recursion.
pub fn local_obligation(t: &AssertionTree, n: NodeId) -> Option<(TsKind, Formula)> {
    match t.label(n) {
        Label::Interaction(i) => Some((TsKind::Interaction, Formula::exists(i.vars.clone(), i.pred.clone()))),
        Label::Selector { .. } => {
            let guards = t.children(n).iter().map(|g| t.predicate(*g));
            Some((TsKind::Branching, Formula::disjunction(guards)))
        }
        Label::RecDef { init, params, invariant, .. } => {
            Some((TsKind::RecDef, Substitution::zip(params, init).apply(invariant)))
        }
        Label::RecCall { .. } => call_instance(t, n).map(|f| (TsKind::RecCall, f)),
        Label::Guard { .. } | Label::End => None,
    }
}

pub fn obligation_holds(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<bool, LogicError> {
    match local_obligation(t, n) {
        None => Ok(true),
        Some((_, o)) => solver.entails(&t.context(n), &o),
    }
}

fn extend(ctx: &Formula, f: Formula) -> Formula {
    Formula::conjunction_skip_true([ctx.clone(), f])
}

/// GSat(g, psi): the first node (preorder) whose side condition fails under
/// the accumulated context starting from `psi`, or `None` when it holds.
pub fn gsat_failure(g: &GlobalAssertion, psi: &Formula, solver: &dyn Solver) -> Result<Option<NodeId>, LogicError> {
    let t = g.tree();
    gsat_from(&t, t.root(), psi.clone(), solver)
}

fn gsat_from(t: &AssertionTree, n: NodeId, ctx: Formula, solver: &dyn Solver) -> Result<Option<NodeId>, LogicError> {
    if let Some((_, o)) = local_obligation(t, n) {
        if !solver.entails(&ctx, &o)? {
            return Ok(Some(n));
        }
    }
    for c in t.children(n) {
        let next = match t.label(*c) {
            // Guards contribute their formula to the branch below them.
            Label::Guard { guard, .. } => {
                let inner = extend(&ctx, guard.clone());
                match t.children(*c).first() {
                    Some(g) => gsat_from(t, *g, inner, solver)?,
                    None => None,
                }
            }
            _ => gsat_from(t, *c, extend(&ctx, t.predicate(n)), solver)?,
        };
        if next.is_some() {
            return Ok(next);
        }
    }
    Ok(None)
}

pub fn gsat(g: &GlobalAssertion, psi: &Formula, solver: &dyn Solver) -> Result<bool, LogicError> {
    Ok(gsat_failure(g, psi, solver)?.is_none())
}

/// TS of the assertion cut at `n`: every side condition on the path to `n`
/// holds.
pub fn ts_node(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<bool, crate::Error> {
    t.node(n)?;
    for m in t.path(n) {
        if !obligation_holds(t, m, solver)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Nodes whose side condition fails while every node above them passes,
/// in preorder.
pub fn ts_violations_in(t: &AssertionTree, solver: &dyn Solver) -> Result<Vec<TsViolation>, LogicError> {
    let mut out = Vec::new();
    let mut stack = vec![t.root()];
    while let Some(n) = stack.pop() {
        if let Some((kind, obligation)) = local_obligation(t, n) {
            let context = t.context(n);
            if !solver.entails(&context, &obligation)? {
                out.push(TsViolation { node: n, kind, context, obligation });
                continue;
            }
        }
        stack.extend(t.children(n).iter().rev());
    }
    out.sort_by_key(|v| v.node);
    Ok(out)
}

pub fn ts_violations(g: &GlobalAssertion, solver: &dyn Solver) -> Result<Vec<TsViolation>, LogicError> {
    ts_violations_in(&g.tree(), solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::BuiltinSolver;
    use crate::parser::parse;

    fn g(src: &str) -> GlobalAssertion {
        parse(src).unwrap().assertion
    }

    const CONFLICT: &str = "p -> q : (x | x < 10) . p -> q : (y | y > 8) . q -> p : (z | x > z && z > 6 && y != z)";

    #[test]
    fn running_example_fails_at_the_last_interaction() {
        let s = BuiltinSolver::default();
        let a = g(CONFLICT);
        assert_eq!(gsat_failure(&a, &Formula::True, &s).unwrap(), Some(NodeId(3)));
        let v = ts_violations(&a, &s).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].node, v[0].kind), (NodeId(3), TsKind::Interaction));
        let t = a.tree();
        assert!(ts_node(&t, NodeId(1), &s).unwrap());
        assert!(!ts_node(&t, NodeId(3), &s).unwrap());
    }

    #[test]
    fn clean_and_trivial_assertions() {
        let s = BuiltinSolver::default();
        assert!(gsat(&g("Alice -> Bob : (a | a > 0) . Bob -> Carol : (b | b > a)"), &Formula::True, &s).unwrap());
        assert!(gsat(&GlobalAssertion::End, &Formula::False, &s).unwrap());
    }

    #[test]
    fn recursion_invariant_at_definition() {
        let s = BuiltinSolver::default();
        let a = g("p -> q : (x | true) . rec t<8>(y | x > y && y > 6) . end");
        let v = ts_violations(&a, &s).unwrap();
        assert_eq!((v[0].node, v[0].kind), (NodeId(2), TsKind::RecDef));
        assert_eq!(v[0].obligation.to_string(), "x > 8 && 8 > 6");
    }

    #[test]
    fn branching_needs_some_guard() {
        let s = BuiltinSolver::default();
        let a = g("p -> q : (v | true) . choice p -> q { {v > 5} l1 : end ; {v < 5} l2 : end }");
        let v = ts_violations(&a, &s).unwrap();
        assert_eq!((v[0].node, v[0].kind), (NodeId(2), TsKind::Branching));
        let ok = g("p -> q : (v | true) . choice p -> q { {v > 5} l1 : end ; {v <= 5} l2 : end }");
        assert!(ts_violations(&ok, &s).unwrap().is_empty());
    }

    #[test]
    fn calls_check_the_instantiated_invariant() {
        let s = BuiltinSolver::default();
        let a = g("rec t<1>(k | k > 0) . p -> q : (x | true) . t<x>");
        let v = ts_violations(&a, &s).unwrap();
        assert_eq!((v[0].node, v[0].kind), (NodeId(3), TsKind::RecCall));
        assert_eq!(v[0].obligation.to_string(), "x > 0");
    }

    #[test]
    fn violations_do_not_descend_below_failures() {
        let s = BuiltinSolver::default();
        let a = g("p -> q : (x | x > 0 && x < 0) . q -> p : (y | y > x && y < x)");
        let v = ts_violations(&a, &s).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].node, NodeId(1));
    }
}
