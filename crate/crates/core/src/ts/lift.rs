use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{call_instance, local_obligation, obligation_holds, ts_violations_in};
use crate::ast::{knows_at, AssertionTree, GlobalAssertion, Label, NodeId};
use crate::logic::{Formula, LogicError, Solver};
use crate::repair::{Algorithm, Change, FailReason, RepairOutcome};

/// Above this many candidate conjuncts `split` only tries singletons, pairs
/// and the whole set instead of every subset.
const SPLIT_EXHAUSTIVE_LIMIT: usize = 10;

fn owned_conjuncts(psi: &Formula) -> Vec<Formula> {
    psi.conjuncts().into_iter().filter(|c| **c != Formula::True).cloned().collect()
}

/// Indices of the conjuncts of `psi` that constrain only `vars` and of the
/// remaining ones.
fn partition(conjuncts: &[Formula], vars: &[String]) -> (Vec<usize>, Vec<usize>) {
    (0..conjuncts.len()).partition(|&i| conjuncts[i].free_vars().iter().all(|v| vars.contains(v)))
}

fn conj_of(conjuncts: &[Formula], idx: impl IntoIterator<Item = usize>) -> Formula {
    Formula::conjunction(idx.into_iter().map(|i| conjuncts[i].clone()))
}

/// Splits `psi` into the conjuncts over `vars` alone and the rest; the
/// conjunction of both is equivalent to `psi`.
pub fn rewrite(psi: &Formula, vars: &[String]) -> (Formula, Formula) {
    let cs = owned_conjuncts(psi);
    let (own, rest) = partition(&cs, vars);
    (conj_of(&cs, own), conj_of(&cs, rest))
}

/// `psi` conflicts on `vars` with `phi` in `context` when `phi` alone can
/// always be met but `phi && psi` cannot.
pub fn in_conflict(
    psi: &Formula,
    vars: &[String],
    phi: &Formula,
    context: &Formula,
    solver: &dyn Solver,
) -> Result<bool, LogicError> {
    if !solver.entails(context, &Formula::exists(vars.to_vec(), phi.clone()))? {
        return Ok(false);
    }
    let both = phi.clone().and(psi.clone());
    Ok(!solver.entails(context, &Formula::exists(vars.to_vec(), both))?)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

fn subset_sizes(k: usize) -> Vec<usize> {
    if k <= SPLIT_EXHAUSTIVE_LIMIT {
        (1..=k).collect()
    } else {
        vec![1, 2, k]
    }
}

/// Subsets (as index lists into `conjuncts`) of `rest` in conflict on
/// `vars` with the `own` conjuncts plus the other members of `rest`.
fn conflicting_subsets(
    conjuncts: &[Formula],
    own: &[usize],
    rest: &[usize],
    vars: &[String],
    context: &Formula,
    solver: &dyn Solver,
) -> Result<Vec<Vec<usize>>, LogicError> {
    let mut out = Vec::new();
    for k in subset_sizes(rest.len()) {
        for subset in combinations(rest, k) {
            let others = rest.iter().copied().filter(|i| !subset.contains(i));
            let phi = conj_of(conjuncts, own.iter().copied().chain(others));
            let psi = conj_of(conjuncts, subset.iter().copied());
            if in_conflict(&psi, vars, &phi, context, solver)? {
                out.push(subset);
            }
        }
    }
    Ok(out)
}

/// The parts of `psi` that are in conflict on the variables of `n` with
/// `phi` and the remaining parts, smallest first.
pub fn split(
    t: &AssertionTree,
    n: NodeId,
    phi: &Formula,
    psi: &Formula,
    solver: &dyn Solver,
) -> Result<Vec<Formula>, LogicError> {
    let mut cs = owned_conjuncts(phi);
    let own: Vec<usize> = (0..cs.len()).collect();
    let start = cs.len();
    cs.extend(owned_conjuncts(psi));
    let rest: Vec<usize> = (start..cs.len()).collect();
    let subsets = conflicting_subsets(&cs, &own, &rest, t.vars(n), &t.context(n), solver)?;
    Ok(subsets.into_iter().map(|s| conj_of(&cs, s)).collect())
}

/// A quantified copy of the lifted predicate added to one ancestor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Insertion {
    pub node: NodeId,
    pub universal: Vec<String>,
    pub existential: Vec<String>,
    /// `forall universal. exists existential. psi`
    pub lifted: Formula,
    /// The node's new predicate.
    pub predicate: Formula,
    pub satisfiable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftPlan {
    pub target: NodeId,
    pub psi: Formula,
    pub insertions: Vec<Insertion>,
    pub tree: AssertionTree,
}

impl LiftPlan {
    pub fn changes(&self, before: &AssertionTree) -> Vec<Change> {
        self.insertions
            .iter()
            .map(|i| Change {
                node: i.node,
                algorithm: Algorithm::Phi3,
                before: before.label(i.node).clone(),
                after: self.tree.label(i.node).clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "refusal", rename_all = "camelCase")]
pub enum BuildRefusal {
    /// The predicate mentions parameters of an enclosing recursion.
    RecursionParameter { node: NodeId, params: Vec<String> },
    /// Some insertion would make a predicate unsatisfiable.
    Unsatisfiable { insertions: Vec<Insertion> },
}

/// Adds `psi`, suitably quantified, to every interaction above `n` that
/// introduces one of its variables. Variables introduced higher up that the
/// sender does not know there are universally quantified; those introduced
/// further down are existentially quantified.
pub fn build_plan(
    t: &AssertionTree,
    n: NodeId,
    psi: &Formula,
    solver: &dyn Solver,
) -> Result<Result<LiftPlan, BuildRefusal>, LogicError> {
    let fv = psi.free_vars();
    let ancestors = t.ancestors(n);
    for a in &ancestors {
        if let Label::RecDef { params, .. } = t.label(*a) {
            let hit: Vec<String> = params.iter().filter(|p| fv.contains(*p)).cloned().collect();
            if !hit.is_empty() {
                return Ok(Err(BuildRefusal::RecursionParameter { node: *a, params: hit }));
            }
        }
    }
    let mut tree = t.clone();
    let mut insertions = Vec::new();
    for (k, a) in ancestors.iter().enumerate() {
        let Label::Interaction(i) = t.label(*a) else { continue };
        if !i.vars.iter().any(|v| fv.contains(v)) {
            continue;
        }
        let known = knows_at(&i.sender, t, *a);
        let mut universal = Vec::new();
        for m in &ancestors[..k] {
            universal.extend(t.introduced(*m).iter().filter(|w| fv.contains(*w) && !known.contains(*w)).cloned());
        }
        let mut existential = Vec::new();
        for m in ancestors[k + 1..].iter().chain(std::iter::once(&n)) {
            existential.extend(t.introduced(*m).iter().filter(|w| fv.contains(*w)).cloned());
        }
        let lifted = Formula::forall(universal.clone(), Formula::exists(existential.clone(), psi.clone()));
        let predicate = i.pred.clone().and(lifted.clone());
        let satisfiable = solver.is_satisfiable(&predicate)?;
        tree = tree.with_predicate(*a, predicate.clone());
        insertions.push(Insertion { node: *a, universal, existential, lifted, predicate, satisfiable });
    }
    if insertions.iter().any(|i| !i.satisfiable) {
        return Ok(Err(BuildRefusal::Unsatisfiable { insertions }));
    }
    Ok(Ok(LiftPlan { target: n, psi: psi.clone(), insertions, tree }))
}

/// The tree produced by lifting `psi` from `n`, if the lifting is allowed.
pub fn build(t: &AssertionTree, n: NodeId, psi: &Formula, solver: &dyn Solver) -> Result<Option<AssertionTree>, LogicError> {
    Ok(build_plan(t, n, psi, solver)?.ok().map(|p| p.tree))
}

/// Predicates worth lifting from `n`, in the order they are tried. For an
/// interaction these are its own-variable conjuncts together with each
/// conflicting part, kept in their original order.
pub(crate) fn lift_candidates(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<Vec<Formula>, LogicError> {
    Ok(match t.label(n) {
        Label::Interaction(i) => {
            let cs = owned_conjuncts(&i.pred);
            let (own, rest) = partition(&cs, &i.vars);
            conflicting_subsets(&cs, &own, &rest, &i.vars, &t.context(n), solver)?
                .into_iter()
                .map(|s| {
                    let mut idx: Vec<usize> = own.iter().copied().chain(s).collect();
                    idx.sort_unstable();
                    conj_of(&cs, idx)
                })
                .collect()
        }
        Label::RecDef { .. } | Label::Selector { .. } => local_obligation(t, n).map(|(_, f)| f).into_iter().collect(),
        Label::RecCall { .. } => call_instance(t, n).into_iter().collect(),
        Label::Guard { .. } | Label::End => Vec::new(),
    })
}

/// A lift of `psi` from `n` that builds and actually discharges the
/// obligation at `n`.
pub(crate) fn effective_lift(
    t: &AssertionTree,
    n: NodeId,
    psi: &Formula,
    solver: &dyn Solver,
) -> Result<Option<LiftPlan>, LogicError> {
    match build_plan(t, n, psi, solver)? {
        Ok(plan) if obligation_holds(&plan.tree, n, solver)? => Ok(Some(plan)),
        _ => Ok(None),
    }
}

/// Resolves the TS problem at `n` by lifting, or `None`. Branchings use the
/// disjunction of their guards.
pub fn ts_res(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<Option<LiftPlan>, LogicError> {
    let mut error = None;
    for psi in lift_candidates(t, n, solver)? {
        match effective_lift(t, n, &psi, solver) {
            Ok(Some(plan)) => return Ok(Some(plan)),
            Ok(None) => {}
            Err(e) => error = Some(e),
        }
    }
    error.map_or(Ok(None), Err)
}

/// Every distinct effective lift for `n`, in candidate order.
pub fn lift_plans(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<Vec<LiftPlan>, LogicError> {
    let mut out: Vec<LiftPlan> = Vec::new();
    let mut error = None;
    for psi in lift_candidates(t, n, solver)? {
        match effective_lift(t, n, &psi, solver) {
            Ok(Some(plan)) if !out.iter().any(|p| p.tree == plan.tree) => out.push(plan),
            Ok(_) => {}
            Err(e) => error = Some(e),
        }
    }
    match error {
        Some(e) if out.is_empty() => Err(e),
        _ => Ok(out),
    }
}

fn equivalent(a: &Formula, b: &Formula, solver: &dyn Solver) -> bool {
    a == b || (solver.entails(a, b).unwrap_or(false) && solver.entails(b, a).unwrap_or(false))
}

/// Φ3: lift until TS holds or some problem cannot be lifted. A predicate
/// equivalent to one already lifted from the same node is never lifted
/// again, and the loop is bounded by ten steps per node.
pub fn phi3(g: &GlobalAssertion, solver: &dyn Solver) -> RepairOutcome {
    let mut tree = g.tree();
    let fuel = 10 * tree.len().max(1);
    let mut changes: Vec<Change> = Vec::new();
    let mut memo: Vec<(NodeId, Formula)> = Vec::new();
    let failed = |tree: &AssertionTree, node, changes, reason| RepairOutcome::Failed {
        assertion: tree.to_assertion(),
        node,
        changes,
        reason,
    };
    for _ in 0..fuel {
        let violations = match ts_violations_in(&tree, solver) {
            Ok(v) => v,
            Err(e) => return failed(&tree, tree.root(), changes, FailReason::Solver(e)),
        };
        let Some(first) = violations.first() else {
            return if changes.is_empty() {
                RepairOutcome::Unchanged
            } else {
                RepairOutcome::Fixed { assertion: tree.to_assertion(), changes }
            };
        };
        let mut error = None;
        let mut applied = None;
        'search: for v in &violations {
            let candidates = match lift_candidates(&tree, v.node, solver) {
                Ok(c) => c,
                Err(e) => {
                    error = Some(e);
                    continue;
                }
            };
            for psi in candidates {
                if memo.iter().any(|(m, f)| *m == v.node && equivalent(f, &psi, solver)) {
                    continue;
                }
                match effective_lift(&tree, v.node, &psi, solver) {
                    Ok(Some(plan)) => {
                        applied = Some(plan);
                        break 'search;
                    }
                    Ok(None) => {}
                    Err(e) => error = Some(e),
                }
            }
        }
        let Some(plan) = applied else {
            let reason = error.map_or(FailReason::NotApplicable, FailReason::Solver);
            return failed(&tree, first.node, changes, reason);
        };
        changes.extend(plan.changes(&tree));
        memo.push((plan.target, plan.psi.clone()));
        tree = plan.tree;
    }
    let node = changes.last().map_or(tree.root(), |c| c.node);
    failed(&tree, node, changes, FailReason::FuelExhausted)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "strategy", content = "label", rename_all = "camelCase")]
pub enum BranchStrategy {
    /// Lift the disjunction of all guards.
    Disjunction,
    /// Lift the guard of one branch.
    Single(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchOption {
    pub strategy: BranchStrategy,
    pub lifted: Formula,
    /// Present when the lift builds and repairs the branching.
    pub plan: Option<LiftPlan>,
    pub refusal: Option<BuildRefusal>,
    /// Labels of branches that can no longer be taken after this option.
    pub dead_branches: Vec<String>,
}

/// Ways to repair a branching none of whose guards is guaranteed: lift the
/// disjunction of the guards, or the guard of a single branch.
pub fn branch_repair_options(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<Vec<BranchOption>, LogicError> {
    if !matches!(t.label(n), Label::Selector { .. }) || obligation_holds(t, n, solver)? {
        return Ok(Vec::new());
    }
    let guards: Vec<(String, Formula)> = t
        .children(n)
        .iter()
        .filter_map(|g| match t.label(*g) {
            Label::Guard { guard, label } => Some((label.clone(), guard.clone())),
            _ => None,
        })
        .collect();
    let mut candidates = vec![(BranchStrategy::Disjunction, Formula::disjunction(guards.iter().map(|g| g.1.clone())))];
    if guards.len() > 1 {
        candidates.extend(guards.iter().map(|(l, f)| (BranchStrategy::Single(l.clone()), f.clone())));
    }
    let was_live: Vec<bool> = guards
        .iter()
        .map(|(_, f)| solver.is_satisfiable(&t.context(n).and(f.clone())))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (strategy, lifted) in candidates {
        let (plan, refusal) = match build_plan(t, n, &lifted, solver)? {
            Ok(plan) if obligation_holds(&plan.tree, n, solver)? => (Some(plan), None),
            Ok(_) => (None, None),
            Err(r) => (None, Some(r)),
        };
        let mut dead_branches = Vec::new();
        if let Some(p) = &plan {
            let ctx = p.tree.context(n);
            for ((label, guard), live) in guards.iter().zip(&was_live) {
                if *live && !solver.is_satisfiable(&ctx.clone().and(guard.clone()))? {
                    dead_branches.push(label.clone());
                }
            }
        }
        out.push(BranchOption { strategy, lifted, plan, refusal, dead_branches });
    }
    Ok(out)
}

/// Variables of `psi` in order of introduction along the path to `n`.
pub(crate) fn ordered_vars(t: &AssertionTree, n: NodeId, vars: &BTreeSet<String>) -> Vec<String> {
    let mut out: Vec<String> = t.scope(n).into_iter().filter(|v| vars.contains(v)).collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::BuiltinSolver;
    use crate::parser::parse;
    use crate::ts::ts_violations;

    const CONFLICT: &str = "p -> q : (x | x < 10) . p -> q : (y | y > 8) . q -> p : (z | x > z && z > 6 && y != z)";

    fn tree(src: &str) -> AssertionTree {
        parse(src).unwrap().assertion.tree()
    }

    fn f(src: &str) -> Formula {
        crate::parser::parse_formula(src).unwrap()
    }

    #[test]
    fn rewrite_separates_own_conjuncts() {
        let (phi, rest) = rewrite(&f("x > z && z > 6 && y != z"), &["z".into()]);
        assert_eq!(phi, f("z > 6"));
        assert_eq!(rest, f("x > z && y != z"));
        assert_eq!(rewrite(&f("a > 0"), &["a".into()]), (f("a > 0"), Formula::True));
        assert_eq!(rewrite(&f("x > y"), &["y".into()]), (Formula::True, f("x > y")));
    }

    #[test]
    fn conflicts_of_the_running_example() {
        let s = BuiltinSolver::default();
        let ctx = f("x < 10 && y > 8");
        let z = vec!["z".to_string()];
        assert!(in_conflict(&f("x > z"), &z, &f("z > 6 && y != z"), &ctx, &s).unwrap());
        assert!(!in_conflict(&f("y != z"), &z, &f("z > 6 && x > z"), &ctx, &s).unwrap());
        assert!(!in_conflict(&Formula::True, &z, &f("z > 6"), &ctx, &s).unwrap());
        let t = tree(CONFLICT);
        let parts = split(&t, NodeId(3), &f("z > 6"), &f("x > z && y != z"), &s).unwrap();
        assert_eq!(parts[0], f("x > z"));
        assert_eq!(parts, vec![f("x > z"), f("x > z && y != z")]);
    }

    #[test]
    fn build_quantifies_later_variables() {
        let s = BuiltinSolver::default();
        let t = tree(CONFLICT);
        let plan = build_plan(&t, NodeId(3), &f("x > z && z > 6"), &s).unwrap().unwrap();
        assert_eq!(plan.insertions.len(), 1);
        assert_eq!(plan.tree.predicate(NodeId(1)).to_string(), "x < 10 && (exists z. x > z && z > 6)");
    }

    #[test]
    fn build_refuses_recursion_parameters() {
        let s = BuiltinSolver::default();
        let t = tree("rec t<1>(k | true) . p -> q : (x | x > k) . t<x>");
        let r = build_plan(&t, NodeId(3), &f("x > k"), &s).unwrap();
        assert!(matches!(r, Err(BuildRefusal::RecursionParameter { .. })));
    }

    #[test]
    fn own_sender_variables_give_plain_conjunctions() {
        let s = BuiltinSolver::default();
        let t = tree("p -> q : (a b | true) . q -> p : (c | c > a + b)");
        let plan = build_plan(&t, NodeId(2), &f("a + b > 0"), &s).unwrap().unwrap();
        assert_eq!(plan.insertions[0].lifted, f("a + b > 0"));
    }

    #[test]
    fn phi3_on_the_running_example() {
        let s = BuiltinSolver::default();
        let g = parse(CONFLICT).unwrap().assertion;
        let out = phi3(&g, &s);
        let RepairOutcome::Fixed { assertion, changes } = out else { panic!("{out:?}") };
        assert_eq!(changes.len(), 1);
        assert!(ts_violations(&assertion, &s).unwrap().is_empty());
    }

    #[test]
    fn branch_options() {
        let s = BuiltinSolver::default();
        let t = tree("p -> q : (v | true) . choice p -> q { {v > 5} l1 : end ; {v < 5} l2 : end }");
        let opts = branch_repair_options(&t, NodeId(2), &s).unwrap();
        assert_eq!(opts.len(), 3);
        assert_eq!(opts[0].strategy, BranchStrategy::Disjunction);
        assert_eq!(opts[0].plan.as_ref().unwrap().tree.predicate(NodeId(1)).to_string(), "true && (v > 5 || v < 5)");
        assert!(opts[0].dead_branches.is_empty());
        let l2 = opts.iter().find(|o| o.strategy == BranchStrategy::Single("l2".into())).unwrap();
        assert_eq!(l2.dead_branches, vec!["l1"]);
    }

    #[test]
    fn subsets_are_enumerated_by_size() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subset_sizes(12), vec![1, 2, 12]);
    }
}
