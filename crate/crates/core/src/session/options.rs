use std::collections::BTreeSet;

use serde::Serialize;

use super::{RepairTag, Violation, ViolationKind};
use crate::ast::{AssertionTree, GlobalAssertion, Label, NodeId};
use crate::hs::{disclosure_report, propagations, strengthenings, unknown_vars, Disclosure, Strengthening};
use crate::logic::{LogicError, Solver};
use crate::parser::{parse, print, SourceSpan};
use crate::repair::{Algorithm, Change};
use crate::ts::{branch_repair_options, conflict_diagnostics, ConflictReport, LiftPlan};

/// A predicate-level difference at one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Edit {
    pub node: NodeId,
    pub algorithm: Algorithm,
    pub before: String,
    pub after: String,
    pub before_predicate: String,
    pub after_predicate: String,
}

impl Edit {
    pub fn from_change(c: &Change) -> Self {
        Edit {
            node: c.node,
            algorithm: c.algorithm,
            before: c.before.to_string(),
            after: c.after.to_string(),
            before_predicate: c.before.predicate().to_string(),
            after_predicate: c.after.predicate().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Warning {
    /// Values become visible to parties that did not see them before.
    Disclosure(Disclosure),
    /// A branch can no longer be taken.
    DeadBranch { label: String },
    /// The option rewrites something an earlier strengthening relied on.
    Interference { node: NodeId, message: String },
}

/// A candidate amendment for one violation, with its fully computed result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RepairChoice {
    pub id: String,
    pub violation: String,
    pub tag: RepairTag,
    pub rationale: String,
    #[serde(skip)]
    pub preview: GlobalAssertion,
    pub preview_text: String,
    pub edits: Vec<Edit>,
    #[serde(skip)]
    pub changes: Vec<Change>,
    pub warnings: Vec<Warning>,
}

/// The options for a violation; `diagnostics` explains a TS problem none
/// of them can fix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidates {
    pub options: Vec<RepairChoice>,
    pub diagnostics: Option<ConflictReport>,
}

/// Source positions of the nodes of `text`, which must parse.
pub(crate) fn spans_of(text: &str) -> Vec<SourceSpan> {
    parse(text).map(|p| p.spans).unwrap_or_default()
}

pub(crate) fn line_of(spans: &[SourceSpan], n: NodeId) -> usize {
    spans.get(n.0.wrapping_sub(1)).map_or(0, |s| s.line)
}

/// Strengthens `n` starting from `first` until no variable at `n` is
/// unknown, always taking the first admissible substitution.
fn complete_strengthening(
    first: Strengthening,
    before: &AssertionTree,
    solver: &dyn Solver,
) -> Result<Option<(AssertionTree, Vec<Change>)>, LogicError> {
    let n = first.node;
    let mut changes = vec![first.change(before)];
    let mut tree = first.tree;
    while !unknown_vars(&tree, n).is_empty() {
        let Some(next) = strengthenings(&tree, n, solver)?.into_iter().next() else {
            return Ok(None);
        };
        changes.push(next.change(&tree));
        tree = next.tree;
    }
    Ok(Some((tree, merge(changes))))
}

/// Propagates every unknown variable of `n` to its responsible party.
fn complete_propagation(t: &AssertionTree, n: NodeId) -> Option<(AssertionTree, Vec<Change>, Vec<String>)> {
    let mut tree = t.clone();
    let mut changes = Vec::new();
    let mut vars = Vec::new();
    while !unknown_vars(&tree, n).is_empty() {
        let p = propagations(&tree, n).into_iter().next()?;
        changes.extend(p.changes(&tree));
        vars.push(p.var.clone());
        tree = p.tree;
    }
    Some((tree, merge(changes), vars))
}

/// Collapses successive changes of the same node into one.
fn merge(changes: Vec<Change>) -> Vec<Change> {
    let mut out: Vec<Change> = Vec::new();
    for c in changes {
        match out.iter_mut().find(|o| o.node == c.node) {
            Some(o) => o.after = c.after,
            None => out.push(c),
        }
    }
    out.sort_by_key(|c| c.node);
    out
}

fn plan_changes(plan: &LiftPlan, before: &AssertionTree) -> Vec<Change> {
    plan.changes(before)
}

/// Variables a strengthening substituted in, per node.
pub(crate) fn strengthened(history: &[Change]) -> Vec<(NodeId, BTreeSet<String>)> {
    history
        .iter()
        .filter(|c| c.algorithm == Algorithm::Phi1)
        .map(|c| {
            let old = c.before.predicate().free_vars();
            let added = c.after.predicate().free_vars().into_iter().filter(|v| !old.contains(v)).collect();
            (c.node, added)
        })
        .collect()
}

fn interference(plan: &LiftPlan, earlier: &[(NodeId, BTreeSet<String>)]) -> Vec<Warning> {
    let lifted = plan.psi.free_vars();
    let mut out = Vec::new();
    for (node, added) in earlier {
        let touched = plan.insertions.iter().any(|i| i.node == *node);
        let shared: Vec<&String> = added.iter().filter(|v| lifted.contains(*v)).collect();
        if touched || !shared.is_empty() {
            let message = if touched {
                format!("lifting rewrites {node}, which was strengthened earlier")
            } else {
                let names: Vec<&str> = shared.iter().map(|s| s.as_str()).collect();
                format!("the lifted predicate mentions {}, introduced by the strengthening at {node}", names.join(", "))
            };
            out.push(Warning::Interference { node: *node, message });
        }
    }
    out
}

struct Draft {
    tag: RepairTag,
    rationale: String,
    tree: AssertionTree,
    changes: Vec<Change>,
    warnings: Vec<Warning>,
}

fn describe_edits(changes: &[Change], spans: &[SourceSpan]) -> String {
    let parts: Vec<String> = changes
        .iter()
        .map(|c| format!("line {} becomes {}", line_of(spans, c.node), c.after))
        .collect();
    parts.join("; ")
}

/// Every candidate repair for `v` in `g`, each materialized on a copy.
/// `fingerprint` prefixes the option ids; `earlier` lists previous
/// strengthenings for the interference check.
pub(crate) fn candidate_repairs(
    g: &GlobalAssertion,
    text: &str,
    v: &Violation,
    fingerprint: &str,
    earlier: &[(NodeId, BTreeSet<String>)],
    solver: &dyn Solver,
) -> Result<Candidates, LogicError> {
    let t = g.tree();
    let spans = spans_of(text);
    let n = v.node;
    let line = line_of(&spans, n);
    let mut drafts: Vec<Draft> = Vec::new();
    let mut diagnostics = None;
    match v.kind {
        ViolationKind::Hs => {
            for s in strengthenings(&t, n, solver)? {
                let rationale = format!("replace {} by {} at line {line}", s.var, s.replacement);
                if let Some((tree, changes)) = complete_strengthening(s, &t, solver)? {
                    let rationale = format!("{rationale}: {}", tree.predicate(n));
                    if drafts.iter().any(|d| d.tree == tree) {
                        continue;
                    }
                    drafts.push(Draft { tag: RepairTag::Phi1, rationale, tree, changes, warnings: Vec::new() });
                }
            }
            if let Some((tree, changes, vars)) = complete_propagation(&t, n) {
                let after = tree.to_assertion();
                let warnings = disclosure_report(g, &after).into_iter().map(Warning::Disclosure).collect();
                let rationale = format!(
                    "reveal {} to {}: {}",
                    vars.join(", "),
                    v.responsible.as_ref().map_or("the responsible party", |p| p.as_str()),
                    describe_edits(&changes, &spans)
                );
                drafts.push(Draft { tag: RepairTag::Phi2, rationale, tree, changes, warnings });
            }
        }
        ViolationKind::Ts => {
            if matches!(t.label(n), Label::Selector { .. }) {
                for o in branch_repair_options(&t, n, solver)? {
                    let Some(plan) = o.plan else { continue };
                    let tag = match &o.strategy {
                        crate::ts::BranchStrategy::Disjunction => RepairTag::Phi3BranchDisjunction,
                        crate::ts::BranchStrategy::Single(l) => RepairTag::Phi3BranchSingle(l.clone()),
                    };
                    let mut warnings: Vec<Warning> =
                        o.dead_branches.iter().map(|l| Warning::DeadBranch { label: l.clone() }).collect();
                    warnings.extend(interference(&plan, earlier));
                    let changes = plan_changes(&plan, &t);
                    let rationale = format!("lift {}: {}", o.lifted, describe_edits(&changes, &spans));
                    drafts.push(Draft { tag, rationale, tree: plan.tree, changes, warnings });
                }
            } else {
                for plan in crate::ts::lift_plans(&t, n, solver)? {
                    let changes = plan_changes(&plan, &t);
                    let warnings = interference(&plan, earlier);
                    let rationale = format!("lift {}: {}", plan.psi, describe_edits(&changes, &spans));
                    drafts.push(Draft { tag: RepairTag::Phi3Lift, rationale, tree: plan.tree, changes, warnings });
                }
            }
            if drafts.is_empty() {
                diagnostics = Some(conflict_diagnostics(&t, n, solver)?);
            }
        }
    }
    let options = drafts
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let preview = d.tree.to_assertion();
            RepairChoice {
                id: format!("{fingerprint}.{}.{}", v.id, k + 1),
                violation: v.id.clone(),
                tag: d.tag,
                rationale: d.rationale,
                preview_text: print(&preview),
                preview,
                edits: d.changes.iter().map(Edit::from_change).collect(),
                changes: d.changes,
                warnings: d.warnings,
            }
        })
        .collect();
    Ok(Candidates { options, diagnostics })
}
