//! History sensitivity: every responsible party must know the variables of
//! the predicate it guarantees. Includes the strengthening repair (Φ1) and,
//! in [`propagate`], the variable-propagation repair (Φ2).

mod propagate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use propagate::{
    disclosure_report, find_chain, phi2, propagate_along, propagate_once, propagations, Disclosure, Propagation,
};

use crate::ast::{knows, knows_at, AssertionTree, AstError, GlobalAssertion, Label, NodeId, Participant};
use crate::logic::{Expr, Formula, LogicError, Solver, Substitution};
use crate::repair::{iterate, Algorithm, Change, FailReason, RepairOutcome};
use crate::ts;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HsViolation {
    pub node: NodeId,
    pub responsible: Participant,
    pub unknown_vars: BTreeSet<String>,
}

pub fn responsible(t: &AssertionTree, n: NodeId) -> Result<Option<Participant>, AstError> {
    t.node(n)?;
    Ok(t.responsible(n).cloned())
}

/// Free variables of the node's predicate that its responsible party does
/// not know at that point.
pub fn unknown_vars(t: &AssertionTree, n: NodeId) -> BTreeSet<String> {
    let Some(s) = t.responsible(n) else {
        return BTreeSet::new();
    };
    let known = knows_at(s, t, n);
    t.predicate(n).free_vars().into_iter().filter(|v| !known.contains(v)).collect()
}

pub fn hs_violations_in(t: &AssertionTree) -> Vec<HsViolation> {
    t.ids()
        .filter_map(|n| {
            let unknown = unknown_vars(t, n);
            if unknown.is_empty() {
                return None;
            }
            Some(HsViolation { node: n, responsible: t.responsible(n)?.clone(), unknown_vars: unknown })
        })
        .collect()
}

pub fn hs_violations(g: &GlobalAssertion) -> Vec<HsViolation> {
    hs_violations_in(&g.tree())
}

/// A successful substitution `[replacement/var]` at `node`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strengthening {
    pub node: NodeId,
    pub var: String,
    pub replacement: String,
    pub predicate: Formula,
    pub tree: AssertionTree,
}

impl Strengthening {
    pub fn change(&self, before: &AssertionTree) -> Change {
        Change {
            node: self.node,
            algorithm: Algorithm::Phi1,
            before: before.label(self.node).clone(),
            after: self.tree.label(self.node).clone(),
        }
    }
}

/// Variables the responsible party of `n` knows at `n` that could stand in
/// for `v`, nearest introduction first. Variables introduced at `n` itself
/// are excluded: replacing `v` by a value chosen in the same step would not
/// give the party anything to rely on.
pub fn strengthen_candidates(t: &AssertionTree, n: NodeId, v: &str) -> Vec<String> {
    let Some(s) = t.responsible(n) else {
        return Vec::new();
    };
    let global = knows(s, t);
    let mut out: Vec<String> = Vec::new();
    for m in t.ancestors(n).into_iter().rev() {
        let vars: Vec<&String> = match t.label(m) {
            Label::Interaction(i) if &i.sender == s || &i.receiver == s => i.vars.iter().collect(),
            Label::RecDef { params, .. } => params.iter().filter(|p| global.contains(*p)).collect(),
            _ => Vec::new(),
        };
        for x in vars {
            if x != v && !out.contains(x) {
                out.push(x.clone());
            }
        }
    }
    out
}

/// Checks the strengthening side condition for one candidate, plus the
/// requirement that a satisfiability obligation that held before still
/// holds afterwards.
fn try_candidate(
    t: &AssertionTree,
    n: NodeId,
    v: &str,
    candidate: &str,
    solver: &dyn Solver,
) -> Result<Option<Strengthening>, LogicError> {
    let psi = t.predicate(n);
    let replaced = Substitution::single(v, Expr::var(candidate)).apply(&psi);
    let hyp = t.context(n).and(replaced.clone());
    if !solver.entails(&hyp, &psi)? {
        return Ok(None);
    }
    let next = t.with_predicate(n, replaced.clone());
    let mut watched = vec![n];
    if matches!(t.label(n), Label::Guard { .. }) {
        watched.extend(t.parent(n));
    }
    for m in watched {
        if ts::obligation_holds(t, m, solver)? && !ts::obligation_holds(&next, m, solver)? {
            return Ok(None);
        }
    }
    Ok(Some(Strengthening { node: n, var: v.to_string(), replacement: candidate.to_string(), predicate: replaced, tree: next }))
}

/// Every admissible single substitution at `n`, over all unknown variables
/// (in lexicographic order) and candidates (nearest first). Candidates on
/// which the solver fails are skipped; the error is returned only when
/// nothing succeeded.
pub fn strengthenings(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<Vec<Strengthening>, LogicError> {
    let mut out = Vec::new();
    let mut error = None;
    for v in unknown_vars(t, n) {
        for c in strengthen_candidates(t, n, &v) {
            match try_candidate(t, n, &v, &c, solver) {
                Ok(Some(s)) => out.push(s),
                Ok(None) => {}
                Err(e) => {
                    log::warn!("strengthening {v} by {c} at {n}: {e}");
                    error = Some(e);
                }
            }
        }
    }
    match error {
        Some(e) if out.is_empty() => Err(e),
        _ => Ok(out),
    }
}

fn first_strengthening(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<Option<Strengthening>, LogicError> {
    let mut error = None;
    for v in unknown_vars(t, n) {
        for c in strengthen_candidates(t, n, &v) {
            match try_candidate(t, n, &v, &c, solver) {
                Ok(Some(s)) => return Ok(Some(s)),
                Ok(None) => {}
                Err(e) => error = Some(e),
            }
        }
    }
    error.map_or(Ok(None), Err)
}

/// One strengthening step: the first violation (preorder) admitting a
/// substitution is rewritten.
pub fn strengthen_once(g: &GlobalAssertion, solver: &dyn Solver) -> RepairOutcome {
    let t = g.tree();
    let violations = hs_violations_in(&t);
    let Some(first) = violations.first() else {
        return RepairOutcome::Unchanged;
    };
    let mut error = None;
    for viol in &violations {
        match first_strengthening(&t, viol.node, solver) {
            Ok(Some(s)) => {
                let change = s.change(&t);
                return RepairOutcome::Fixed { assertion: s.tree.to_assertion(), changes: vec![change] };
            }
            Ok(None) => {}
            Err(e) => error = error.or(Some(e)),
        }
    }
    RepairOutcome::Failed {
        assertion: g.clone(),
        node: first.node,
        changes: Vec::new(),
        reason: error.map_or(FailReason::NotApplicable, FailReason::Solver),
    }
}

/// Φ1: strengthen until HS holds or no strengthening applies.
pub fn phi1(g: &GlobalAssertion, solver: &dyn Solver) -> RepairOutcome {
    let fuel = g.tree().len() * 4 + 4;
    iterate(g, fuel, |h| strengthen_once(h, solver))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::BuiltinSolver;
    use crate::parser::{parse, print};

    const RUNNING: &str = "rec t<10>(v | v > 0) .
        Alice -> Bob : (v1 | v >= v1) .
        Bob -> Carol : (v2 | v2 > v1) .
        Carol -> Alice : (v3 | v3 > v1) .
        Carol -> Bob : (v4 | v4 > v) .
        t<v1>";

    fn g(src: &str) -> GlobalAssertion {
        parse(src).unwrap().assertion
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn violations_of_the_running_example() {
        let v = hs_violations(&g(RUNNING));
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].node, v[0].unknown_vars.clone()), (NodeId(4), set(&["v1"])));
        assert_eq!((v[1].node, v[1].unknown_vars.clone()), (NodeId(5), set(&["v"])));
        assert!(v.iter().all(|x| x.responsible.as_str() == "Carol"));
    }

    #[test]
    fn clean_sequence_has_no_violations() {
        assert!(hs_violations(&g("Alice -> Bob : (a | a > 0) . Bob -> Carol : (b | b > a)")).is_empty());
    }

    #[test]
    fn guards_are_the_selectors_responsibility() {
        let t = g("A -> B : (x | true) . choice B -> C { {x > 0} l : end ; {x <= 0} r : end }").tree();
        assert_eq!(responsible(&t, NodeId(3)).unwrap(), Some(Participant::new("B")));
        assert_eq!(responsible(&t, NodeId(4)).unwrap(), None);
        assert!(responsible(&t, NodeId(40)).is_err());
        let t = g("A -> B : (x | true) . choice C -> B { {x > 0} l : end ; {x <= 0} r : end }").tree();
        assert_eq!(hs_violations_in(&t).len(), 2);
    }

    #[test]
    fn phi1_fixes_the_first_violation_then_fails() {
        let solver = BuiltinSolver::default();
        let out = phi1(&g(RUNNING), &solver);
        let RepairOutcome::Failed { assertion, node, changes, .. } = out else { panic!("{out:?}") };
        assert_eq!(node, NodeId(5));
        assert_eq!(changes.len(), 1);
        assert_eq!(assertion.tree().predicate(NodeId(4)).to_string(), "v3 > v2");
        assert!(print(&assertion).contains("Carol -> Alice : (v3 | v3 > v2)"));
    }

    #[test]
    fn candidates_are_nearest_first() {
        let t = g(RUNNING).tree();
        assert_eq!(strengthen_candidates(&t, NodeId(5), "v"), vec!["v3", "v2"]);
    }

    #[test]
    fn phi1_preserves_the_underlying_type() {
        let solver = BuiltinSolver::default();
        let original = g(RUNNING);
        let out = phi1(&original, &solver);
        assert_eq!(out.assertion_or(&original).erase(), original.erase());
    }

    #[test]
    fn clean_input_is_unchanged() {
        let solver = BuiltinSolver::default();
        assert_eq!(phi1(&g("A -> B : (x | x > 0)"), &solver), RepairOutcome::Unchanged);
    }

    #[test]
    fn vacuous_substitutions_are_rejected() {
        // [v2/v1] makes the predicate unsatisfiable, which entails anything;
        // the obligation check refuses it.
        let src = "Alice -> Bob : (v1 | true) . Bob -> Carol : (v2 | v2 > v1 + 1) . \
                   Carol -> Alice : (v3 | v3 > v1 && v3 < v2)";
        let solver = BuiltinSolver::default();
        let t = g(src).tree();
        assert_eq!(unknown_vars(&t, NodeId(3)), set(&["v1"]));
        assert!(strengthenings(&t, NodeId(3), &solver).unwrap().is_empty());
    }
}
