use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::lift::{build_plan, lift_candidates, ordered_vars, rewrite, split, BuildRefusal, Insertion};
use super::{local_obligation, obligation_holds, TsKind};
use crate::ast::{knows_at, AssertionTree, Label, NodeId, Participant};
use crate::logic::{Formula, LogicError, Solver};

/// Where a variable of a conflict comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VarOrigin {
    pub var: String,
    pub node: Option<NodeId>,
    /// The sender of the introducing interaction; `None` for recursion
    /// parameters.
    pub fixed_by: Option<Participant>,
    /// Whether the responsible party of the failing node knows the variable
    /// at the highest point a lifting would touch.
    pub known_by_responsible: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "camelCase")]
pub enum LiftAttempt {
    /// The lifting builds and repairs the node.
    Repairs { lifted: Formula, insertions: Vec<Insertion> },
    /// The lifting builds but the node still fails.
    Ineffective { lifted: Formula, insertions: Vec<Insertion> },
    Refused { lifted: Formula, refusal: BuildRefusal },
}

impl LiftAttempt {
    pub fn lifted(&self) -> &Formula {
        match self {
            LiftAttempt::Repairs { lifted, .. }
            | LiftAttempt::Ineffective { lifted, .. }
            | LiftAttempt::Refused { lifted, .. } => lifted,
        }
    }
}

/// Why a node fails temporal satisfiability and why lifting does not help.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConflictReport {
    pub node: Option<NodeId>,
    pub kind: Option<TsKind>,
    pub obligation: Option<Formula>,
    /// Variables the failing node itself introduces.
    pub constrained: Vec<VarOrigin>,
    /// Minimal-first parts of the predicate that clash with the rest.
    pub conflicts: Vec<Formula>,
    pub attempts: Vec<LiftAttempt>,
    /// Other variables involved in the conflicts, in introduction order.
    pub variables: Vec<VarOrigin>,
    pub summary: String,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.node.is_none()
    }
}

fn list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

fn origin(t: &AssertionTree, at: NodeId, var: &str, reference: Option<(&Participant, &BTreeSet<String>)>) -> VarOrigin {
    let node = t.introducer(var, at);
    let fixed_by = node.and_then(|m| match t.label(m) {
        Label::Interaction(i) => Some(i.sender.clone()),
        _ => None,
    });
    let known_by_responsible = reference.is_none_or(|(_, known)| known.contains(var));
    VarOrigin { var: var.to_string(), node, fixed_by, known_by_responsible }
}

fn fixer(o: &VarOrigin) -> String {
    match &o.fixed_by {
        Some(p) => p.to_string(),
        None => "a recursion parameter".to_string(),
    }
}

/// "v1 and v3, fixed by Alice and Carol respectively"
fn constrained_by(vars: &[VarOrigin]) -> String {
    let names: Vec<String> = vars.iter().map(|v| v.var.clone()).collect();
    let fixers: Vec<String> = vars.iter().map(fixer).collect();
    if fixers.iter().all(|f| *f == fixers[0]) {
        format!("{}, fixed by {}", list(&names), fixers[0])
    } else {
        format!("{}, fixed by {} respectively", list(&names), list(&fixers))
    }
}

fn describe(o: &VarOrigin) -> String {
    match &o.fixed_by {
        Some(p) => format!("{}, fixed by {}", o.var, p),
        None => format!("{}, a recursion parameter", o.var),
    }
}

/// Explains a failing node: which parts of its predicate conflict, where the
/// variables involved are fixed and by whom, and what each lifting attempt
/// ran into. The report is empty when the node has no failing obligation.
pub fn conflict_diagnostics(t: &AssertionTree, n: NodeId, solver: &dyn Solver) -> Result<ConflictReport, LogicError> {
    let Some((kind, obligation)) = local_obligation(t, n) else {
        return Ok(ConflictReport::default());
    };
    if obligation_holds(t, n, solver)? {
        return Ok(ConflictReport::default());
    }
    let own: Vec<String> = t.introduced(n).to_vec();
    let conflicts = match t.label(n) {
        Label::Interaction(i) => {
            let (phi, rest) = rewrite(&i.pred, &i.vars);
            split(t, n, &phi, &rest, solver)?
        }
        _ => vec![obligation.clone()],
    };
    let mut attempts = Vec::new();
    for psi in lift_candidates(t, n, solver)? {
        attempts.push(match build_plan(t, n, &psi, solver)? {
            Ok(plan) if obligation_holds(&plan.tree, n, solver)? => {
                LiftAttempt::Repairs { lifted: psi, insertions: plan.insertions }
            }
            Ok(plan) => LiftAttempt::Ineffective { lifted: psi, insertions: plan.insertions },
            Err(refusal) => LiftAttempt::Refused { lifted: psi, refusal },
        });
    }

    let responsible = t.responsible(n);
    let highest = attempts
        .iter()
        .filter_map(|a| match a {
            LiftAttempt::Repairs { insertions, .. } | LiftAttempt::Ineffective { insertions, .. } => {
                insertions.first().map(|i| i.node)
            }
            LiftAttempt::Refused { refusal: BuildRefusal::Unsatisfiable { insertions }, .. } => {
                insertions.first().map(|i| i.node)
            }
            LiftAttempt::Refused { .. } => None,
        })
        .min()
        .unwrap_or(n);
    let known = responsible.map(|p| knows_at(p, t, highest));
    let reference = responsible.zip(known.as_ref());

    let mut mentioned: BTreeSet<String> = conflicts.iter().flat_map(|c| c.free_vars()).collect();
    mentioned.extend(attempts.iter().flat_map(|a| a.lifted().free_vars()));
    mentioned.retain(|v| !own.contains(v));
    let variables: Vec<VarOrigin> =
        ordered_vars(t, n, &mentioned).iter().map(|v| origin(t, n, v, reference)).collect();
    let constrained: Vec<VarOrigin> = own.iter().map(|v| origin(t, n, v, None)).collect();

    let mut summary = format!("{n} ({kind}): ");
    if constrained.is_empty() {
        let _ = write!(summary, "{obligation} is not guaranteed");
    } else {
        let names: Vec<String> = constrained.iter().map(describe).collect();
        let verb = if constrained.len() == 1 { "is" } else { "are" };
        let _ = write!(summary, "{}, {verb} constrained", list(&names));
    }
    if !variables.is_empty() {
        let _ = write!(summary, " by {}", constrained_by(&variables));
    }
    if let (Some(p), false) = (responsible, variables.iter().all(|v| v.known_by_responsible)) {
        let unknown: Vec<String> =
            variables.iter().filter(|v| !v.known_by_responsible).map(|v| v.var.clone()).collect();
        let verb = if unknown.len() == 1 { "is" } else { "are" };
        let _ = write!(summary, "; {} {verb} not known to {p} at {highest}", list(&unknown));
    }
    for a in &attempts {
        match a {
            LiftAttempt::Repairs { lifted, .. } => {
                let _ = write!(summary, "; lifting {lifted} repairs it");
            }
            LiftAttempt::Ineffective { lifted, .. } => {
                let _ = write!(summary, "; lifting {lifted} does not help");
            }
            LiftAttempt::Refused { lifted, refusal: BuildRefusal::RecursionParameter { params, .. } } => {
                let _ = write!(summary, "; {lifted} cannot be lifted past recursion parameter {}", list(params));
            }
            LiftAttempt::Refused { lifted, refusal: BuildRefusal::Unsatisfiable { insertions } } => {
                let bad: Vec<String> =
                    insertions.iter().filter(|i| !i.satisfiable).map(|i| format!("{} at {}", i.lifted, i.node)).collect();
                let _ = write!(summary, "; lifting {lifted} would need {}, which is unsatisfiable", list(&bad));
            }
        }
    }
    if attempts.is_empty() {
        summary.push_str("; nothing can be lifted");
    }

    Ok(ConflictReport {
        node: Some(n),
        kind: Some(kind),
        obligation: Some(obligation),
        constrained,
        conflicts,
        attempts,
        variables,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::BuiltinSolver;
    use crate::parser::parse;

    #[test]
    fn clean_nodes_have_empty_reports() {
        let s = BuiltinSolver::default();
        let t = parse("p -> q : (x | x > 0)").unwrap().assertion.tree();
        assert!(conflict_diagnostics(&t, NodeId(1), &s).unwrap().is_empty());
    }

    #[test]
    fn unsatisfiable_lifting_is_explained() {
        let s = BuiltinSolver::default();
        let src = "A -> B : (a | true) . B -> C : (b | true) . C -> A : (c | c > a && c < b)";
        let t = parse(src).unwrap().assertion.tree();
        let r = conflict_diagnostics(&t, NodeId(3), &s).unwrap();
        assert_eq!(r.kind, Some(TsKind::Interaction));
        let parts: Vec<String> = r.conflicts.iter().map(|c| c.to_string()).collect();
        assert_eq!(parts, vec!["c > a", "c < b", "c > a && c < b"]);
        let vars: Vec<&str> = r.variables.iter().map(|v| v.var.as_str()).collect();
        assert_eq!(vars, vec!["a", "b"]);
        assert!(r.summary.contains("c, fixed by C"), "{}", r.summary);
        assert!(r.summary.contains("by a and b, fixed by A and B respectively"), "{}", r.summary);
    }
}
