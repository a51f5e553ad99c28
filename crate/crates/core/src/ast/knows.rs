use std::collections::BTreeSet;

use super::{AssertionTree, Label, NodeId, Participant};

/// Variables of the whole assertion that `p` knows: those exchanged in an
/// interaction where `p` is an endpoint, closed under the recursion clause
/// (a parameter is known when the variables of its initial expression and
/// of every corresponding call argument are known). Least fixpoint.
pub fn knows(p: &Participant, t: &AssertionTree) -> BTreeSet<String> {
    let mut known: BTreeSet<String> = BTreeSet::new();
    for n in t.nodes() {
        if let Label::Interaction(i) = &n.label {
            if &i.sender == p || &i.receiver == p {
                known.extend(i.vars.iter().cloned());
            }
        }
    }
    let defs: Vec<(NodeId, Vec<NodeId>)> = t
        .nodes()
        .filter(|n| matches!(n.label, Label::RecDef { .. }))
        .map(|n| (n.id, t.calls_of(n.id)))
        .collect();
    loop {
        let mut grew = false;
        for (def, calls) in &defs {
            let Label::RecDef { init, params, .. } = t.label(*def) else { unreachable!() };
            for (k, param) in params.iter().enumerate() {
                if known.contains(param) {
                    continue;
                }
                let init_known = init.get(k).is_some_and(|e| e.vars().is_subset(&known));
                let calls_known = calls.iter().all(|c| match t.label(*c) {
                    Label::RecCall { args, .. } => args.get(k).is_some_and(|e| e.vars().is_subset(&known)),
                    _ => true,
                });
                if init_known && calls_known {
                    known.insert(param.clone());
                    grew = true;
                }
            }
        }
        if !grew {
            return known;
        }
    }
}

/// What `p` knows at node `n`: variables exchanged on the path to `n`
/// (inclusive) with `p` as an endpoint, plus parameters of enclosing
/// recursions that `p` knows.
pub fn knows_at(p: &Participant, t: &AssertionTree, n: NodeId) -> BTreeSet<String> {
    let global = knows(p, t);
    let mut out = BTreeSet::new();
    for m in t.path(n) {
        match t.label(m) {
            Label::Interaction(i) if &i.sender == p || &i.receiver == p => {
                out.extend(i.vars.iter().cloned());
            }
            Label::RecDef { params, .. } => {
                out.extend(params.iter().filter(|v| global.contains(*v)).cloned());
            }
            _ => {}
        }
    }
    out
}
