use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{hs_violations_in, unknown_vars};
use crate::ast::{knows, knows_at, AssertionTree, AstError, GlobalAssertion, Label, NodeId, Participant};
use crate::logic::{CmpOp, Expr, Formula, Substitution};
use crate::repair::{iterate, Algorithm, Change, FailReason, RepairOutcome};

/// The party that must receive the value at a chain position: the sender
/// of an interaction, the selector for a guard.
fn chain_sender(t: &AssertionTree, n: NodeId) -> Option<&Participant> {
    match t.label(n) {
        Label::Interaction(i) => Some(&i.sender),
        Label::Guard { .. } => t.responsible(n),
        _ => None,
    }
}

fn chain_receiver(t: &AssertionTree, n: NodeId) -> Option<&Participant> {
    match t.label(n) {
        Label::Interaction(i) => Some(&i.receiver),
        _ => None,
    }
}

/// The shortest chain of interactions relaying `v` to the responsible party
/// of `target`, ending in `target`; among equally short chains the
/// lexicographically smallest by node id. Only interactions take part, so
/// values never travel through branch selections.
pub fn find_chain(t: &AssertionTree, v: &str, target: NodeId) -> Result<Option<Vec<NodeId>>, AstError> {
    t.node(target)?;
    let Some(dest) = chain_sender(t, target) else {
        return Ok(None);
    };
    let mut nodes: Vec<NodeId> = t
        .ancestors(target)
        .into_iter()
        .filter(|a| matches!(t.label(*a), Label::Interaction(_)))
        .collect();
    nodes.push(target);
    let last = nodes.len() - 1;
    let sender = |k: usize| if k == last { Some(dest) } else { chain_sender(t, nodes[k]) };
    // dist[k]: number of nodes on the shortest chain from nodes[k] to target.
    let mut dist = vec![usize::MAX; nodes.len()];
    dist[last] = 1;
    for k in (0..last).rev() {
        let r = chain_receiver(t, nodes[k]);
        dist[k] = (k + 1..nodes.len())
            .filter(|&j| dist[j] != usize::MAX && r.is_some() && sender(j) == r)
            .map(|j| dist[j] + 1)
            .min()
            .unwrap_or(usize::MAX);
    }
    let start = (0..last)
        .filter(|&k| dist[k] != usize::MAX)
        .filter(|&k| sender(k).is_some_and(|s| knows_at(s, t, nodes[k]).contains(v)))
        .min_by_key(|&k| (dist[k], k));
    let Some(mut k) = start else {
        return Ok(None);
    };
    let mut chain = vec![nodes[k]];
    while k != last {
        let r = chain_receiver(t, nodes[k]);
        k = (k + 1..nodes.len())
            .find(|&j| dist[j] == dist[k] - 1 && sender(j) == r)
            .expect("distance table is consistent");
        chain.push(nodes[k]);
    }
    Ok(Some(chain))
}

fn is_chain(t: &AssertionTree, chain: &[NodeId]) -> bool {
    let Some((&target, prefix)) = chain.split_last() else {
        return false;
    };
    if prefix.is_empty() || chain_sender(t, target).is_none() {
        return false;
    }
    if prefix.iter().any(|n| !matches!(t.label(*n), Label::Interaction(_))) {
        return false;
    }
    chain.windows(2).all(|w| {
        t.ancestors(w[1]).contains(&w[0]) && chain_receiver(t, w[0]).is_some() && chain_receiver(t, w[0]) == chain_sender(t, w[1])
    })
}

fn reserved_names(t: &AssertionTree) -> BTreeSet<String> {
    let mut out = t.all_names();
    out.extend(t.participants().into_iter().map(|p| p.0));
    for n in t.nodes() {
        if let Label::RecDef { name, .. } | Label::RecCall { name, .. } = &n.label {
            out.insert(name.clone());
        }
    }
    out
}

fn fresh_names(t: &AssertionTree, count: usize) -> Vec<String> {
    let reserved = reserved_names(t);
    (1..).map(|i| format!("u{i}")).filter(|u| !reserved.contains(u)).take(count).collect()
}

/// Relays `v` along `chain`: every node but the last gains a fresh variable
/// equated with the previous one (the first with `v`), and the last node's
/// predicate refers to the final alias instead of `v`. Returns the new tree
/// and the fresh names, or `None` if `chain` is not a chain.
pub fn propagate_along(t: &AssertionTree, v: &str, chain: &[NodeId]) -> Option<(AssertionTree, Vec<String>)> {
    if !is_chain(t, chain) {
        return None;
    }
    let (&target, prefix) = chain.split_last()?;
    let fresh = fresh_names(t, prefix.len());
    let mut out = t.clone();
    let mut prev = v.to_string();
    for (n, u) in prefix.iter().zip(&fresh) {
        let Label::Interaction(mut i) = out.label(*n).clone() else {
            return None;
        };
        i.vars.push(u.clone());
        i.pred = i.pred.and(Formula::Cmp(Expr::var(u.as_str()), CmpOp::Eq, Expr::var(prev.as_str())));
        out = out.with_label(*n, Label::Interaction(i));
        prev = u.clone();
    }
    let pred = Substitution::single(v, Expr::var(prev.as_str())).apply(&out.predicate(target));
    Some((out.with_predicate(target, pred), fresh))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    pub node: NodeId,
    pub var: String,
    pub chain: Vec<NodeId>,
    pub fresh: Vec<String>,
    pub tree: AssertionTree,
}

impl Propagation {
    pub fn changes(&self, before: &AssertionTree) -> Vec<Change> {
        self.chain
            .iter()
            .map(|n| Change {
                node: *n,
                algorithm: Algorithm::Phi2,
                before: before.label(*n).clone(),
                after: self.tree.label(*n).clone(),
            })
            .collect()
    }
}

/// One propagation per unknown variable of `n` that admits a chain.
pub fn propagations(t: &AssertionTree, n: NodeId) -> Vec<Propagation> {
    unknown_vars(t, n)
        .into_iter()
        .filter_map(|v| {
            let chain = find_chain(t, &v, n).ok().flatten()?;
            let (tree, fresh) = propagate_along(t, &v, &chain)?;
            Some(Propagation { node: n, var: v, chain, fresh, tree })
        })
        .collect()
}

/// One propagation step on the first violation (preorder) admitting a chain.
pub fn propagate_once(g: &GlobalAssertion) -> RepairOutcome {
    let t = g.tree();
    let violations = hs_violations_in(&t);
    let Some(first) = violations.first() else {
        return RepairOutcome::Unchanged;
    };
    for viol in &violations {
        if let Some(p) = propagations(&t, viol.node).into_iter().next() {
            return RepairOutcome::Fixed { assertion: p.tree.to_assertion(), changes: p.changes(&t) };
        }
    }
    RepairOutcome::Failed { assertion: g.clone(), node: first.node, changes: Vec::new(), reason: FailReason::NotApplicable }
}

/// Φ2: propagate until HS holds or no chain exists.
pub fn phi2(g: &GlobalAssertion) -> RepairOutcome {
    let fuel = g.tree().len() * 4 + 4;
    iterate(g, fuel, propagate_once)
}

/// Participants who learn a value (through its aliases) that they did not
/// know before a propagation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disclosure {
    pub variable: String,
    pub aliases: Vec<String>,
    pub participants: BTreeSet<Participant>,
}

fn introduced_vars(t: &AssertionTree) -> BTreeSet<String> {
    t.ids().flat_map(|n| t.introduced(n).to_vec()).collect()
}

/// The variable `u` is equated with in the predicate of its introducing
/// interaction, if any.
fn alias_source(t: &AssertionTree, u: &str) -> Option<String> {
    let n = t.ids().find(|n| t.introduced(*n).iter().any(|x| x == u))?;
    let pred = t.predicate(n);
    pred.conjuncts().into_iter().find_map(|c| match c {
        Formula::Cmp(Expr::Var(a), CmpOp::Eq, Expr::Var(b)) if a == u => Some(b.clone()),
        _ => None,
    })
}

pub fn disclosure_report(before: &GlobalAssertion, after: &GlobalAssertion) -> Vec<Disclosure> {
    let (tb, ta) = (before.tree(), after.tree());
    let old = introduced_vars(&tb);
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for u in introduced_vars(&ta).difference(&old) {
        let mut origin = u.clone();
        let mut seen = BTreeSet::new();
        while !old.contains(&origin) && seen.insert(origin.clone()) {
            match alias_source(&ta, &origin) {
                Some(src) => origin = src,
                None => break,
            }
        }
        if old.contains(&origin) {
            groups.entry(origin).or_default().push(u.clone());
        }
    }
    let mut parts = tb.participants();
    parts.extend(ta.participants());
    groups
        .into_iter()
        .map(|(variable, aliases)| {
            let participants = parts
                .iter()
                .filter(|p| {
                    let now = knows(p, &ta);
                    aliases.iter().any(|a| now.contains(a)) && !knows(p, &tb).contains(&variable)
                })
                .cloned()
                .collect();
            Disclosure { variable, aliases, participants }
        })
        .collect()
}
