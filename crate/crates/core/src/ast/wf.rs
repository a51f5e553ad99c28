use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Branch, GlobalAssertion, Interaction, NodeId};
use crate::logic::subst::{fresh_tick, normalize_binders};
use crate::logic::{Expr, Formula, Substitution};

/// A structural problem that makes an assertion ill-formed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "defect", rename_all = "camelCase")]
pub enum Defect {
    UnboundVariable { var: String, node: NodeId },
    SenderEqualsReceiver { node: NodeId },
    DuplicateVariable { var: String, node: NodeId },
    DuplicateLabel { label: String, node: NodeId },
    UnknownRecursion { name: String, node: NodeId },
    ArityMismatch { name: String, node: NodeId, expected: usize, found: usize },
    UnguardedCall { name: String, node: NodeId },
    EmptyBranching { node: NodeId },
    ParticipantVariableClash { name: String, node: NodeId },
}

impl Defect {
    pub fn node(&self) -> NodeId {
        match self {
            Defect::UnboundVariable { node, .. }
            | Defect::SenderEqualsReceiver { node }
            | Defect::DuplicateVariable { node, .. }
            | Defect::DuplicateLabel { node, .. }
            | Defect::UnknownRecursion { node, .. }
            | Defect::ArityMismatch { node, .. }
            | Defect::UnguardedCall { node, .. }
            | Defect::EmptyBranching { node }
            | Defect::ParticipantVariableClash { node, .. } => *node,
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::UnboundVariable { var, node } => write!(f, "{node}: variable `{var}` is not bound"),
            Defect::SenderEqualsReceiver { node } => write!(f, "{node}: sender and receiver coincide"),
            Defect::DuplicateVariable { var, node } => {
                write!(f, "{node}: variable `{var}` listed twice")
            }
            Defect::DuplicateLabel { label, node } => write!(f, "{node}: label `{label}` used twice"),
            Defect::UnknownRecursion { name, node } => {
                write!(f, "{node}: call to undefined recursion `{name}`")
            }
            Defect::ArityMismatch { name, node, expected, found } => write!(
                f,
                "{node}: `{name}` expects {expected} argument(s), found {found}"
            ),
            Defect::UnguardedCall { name, node } => {
                write!(f, "{node}: call to `{name}` is not guarded by a prefix")
            }
            Defect::EmptyBranching { node } => write!(f, "{node}: branching without branches"),
            Defect::ParticipantVariableClash { name, node } => {
                write!(f, "{node}: `{name}` is used both as participant and variable")
            }
        }
    }
}

struct RecFrame {
    name: String,
    arity: usize,
    guarded: bool,
}

struct Checker {
    next: usize,
    defects: Vec<Defect>,
    participants: BTreeMap<String, NodeId>,
    variables: BTreeMap<String, NodeId>,
}

impl Checker {
    fn id(&mut self) -> NodeId {
        self.next += 1;
        NodeId(self.next)
    }

    fn unbound(&mut self, vars: BTreeSet<String>, scope: &[String], node: NodeId) {
        for v in vars {
            if !scope.contains(&v) {
                self.defects.push(Defect::UnboundVariable { var: v, node });
            }
        }
    }

    fn duplicates(&mut self, vars: &[String], node: NodeId) {
        let mut seen = BTreeSet::new();
        for v in vars {
            if !seen.insert(v) {
                self.defects.push(Defect::DuplicateVariable { var: v.clone(), node });
            }
        }
    }

    fn note_names(&mut self, g_parts: &[&str], vars: &[String], node: NodeId) {
        for p in g_parts {
            self.participants.entry(p.to_string()).or_insert(node);
        }
        for v in vars {
            self.variables.entry(v.clone()).or_insert(node);
        }
    }

    fn walk(&mut self, g: &GlobalAssertion, scope: &mut Vec<String>, recs: &mut Vec<RecFrame>) {
        let node = self.id();
        match g {
            GlobalAssertion::Prefix(i, cont) => {
                if i.sender == i.receiver {
                    self.defects.push(Defect::SenderEqualsReceiver { node });
                }
                self.duplicates(&i.vars, node);
                self.note_names(&[i.sender.as_str(), i.receiver.as_str()], &i.vars, node);
                let depth = scope.len();
                scope.extend(i.vars.iter().cloned());
                self.unbound(i.pred.free_vars(), scope, node);
                let saved: Vec<bool> = recs.iter().map(|r| r.guarded).collect();
                recs.iter_mut().for_each(|r| r.guarded = true);
                self.walk(cont, scope, recs);
                recs.iter_mut().zip(saved).for_each(|(r, g)| r.guarded = g);
                scope.truncate(depth);
            }
            GlobalAssertion::Branching { selector, receiver, branches } => {
                if branches.is_empty() {
                    self.defects.push(Defect::EmptyBranching { node });
                }
                if selector == receiver {
                    self.defects.push(Defect::SenderEqualsReceiver { node });
                }
                self.note_names(&[selector.as_str(), receiver.as_str()], &[], node);
                let mut labels = BTreeSet::new();
                let saved: Vec<bool> = recs.iter().map(|r| r.guarded).collect();
                recs.iter_mut().for_each(|r| r.guarded = true);
                for b in branches {
                    let gnode = self.id();
                    if !labels.insert(&b.label) {
                        self.defects.push(Defect::DuplicateLabel { label: b.label.clone(), node: gnode });
                    }
                    self.unbound(b.guard.free_vars(), scope, gnode);
                    self.walk(&b.cont, scope, recs);
                }
                recs.iter_mut().zip(saved).for_each(|(r, g)| r.guarded = g);
            }
            GlobalAssertion::RecDef { name, init, params, invariant, body } => {
                if init.len() != params.len() {
                    self.defects.push(Defect::ArityMismatch {
                        name: name.clone(),
                        node,
                        expected: params.len(),
                        found: init.len(),
                    });
                }
                for e in init {
                    self.unbound(e.vars(), scope, node);
                }
                self.duplicates(params, node);
                self.note_names(&[], params, node);
                let depth = scope.len();
                scope.extend(params.iter().cloned());
                self.unbound(invariant.free_vars(), scope, node);
                recs.push(RecFrame { name: name.clone(), arity: params.len(), guarded: false });
                self.walk(body, scope, recs);
                recs.pop();
                scope.truncate(depth);
            }
            GlobalAssertion::RecCall { name, args } => {
                for e in args {
                    self.unbound(e.vars(), scope, node);
                }
                match recs.iter().rev().find(|r| &r.name == name) {
                    None => self.defects.push(Defect::UnknownRecursion { name: name.clone(), node }),
                    Some(frame) => {
                        if frame.arity != args.len() {
                            self.defects.push(Defect::ArityMismatch {
                                name: name.clone(),
                                node,
                                expected: frame.arity,
                                found: args.len(),
                            });
                        }
                        if !frame.guarded {
                            self.defects.push(Defect::UnguardedCall { name: name.clone(), node });
                        }
                    }
                }
            }
            GlobalAssertion::End => {}
        }
    }
}

/// Structural defects of `g`; empty exactly when `g` is well formed.
pub fn check_well_formed(g: &GlobalAssertion) -> Vec<Defect> {
    let mut c = Checker {
        next: 0,
        defects: Vec::new(),
        participants: BTreeMap::new(),
        variables: BTreeMap::new(),
    };
    c.walk(g, &mut Vec::new(), &mut Vec::new());
    for (name, node) in &c.variables {
        if let Some(pnode) = c.participants.get(name) {
            c.defects.push(Defect::ParticipantVariableClash {
                name: name.clone(),
                node: (*node).min(*pnode),
            });
        }
    }
    c.defects.sort_by_key(|d| d.node());
    c.defects
}

struct Normalizer {
    used: BTreeSet<String>,
    avoid: BTreeSet<String>,
    binders: BTreeSet<String>,
}

impl Normalizer {
    fn bind(&mut self, names: &[String], ren: &mut Substitution) -> Vec<String> {
        names
            .iter()
            .map(|v| {
                if self.used.contains(v) {
                    let fresh = fresh_tick(v, &self.avoid);
                    self.avoid.insert(fresh.clone());
                    self.used.insert(fresh.clone());
                    ren.insert(v.clone(), Expr::Var(fresh.clone()));
                    fresh
                } else {
                    self.used.insert(v.clone());
                    v.clone()
                }
            })
            .collect()
    }

    fn formula(&self, f: &Formula, ren: &Substitution) -> Formula {
        let mut reserved: BTreeSet<String> = self.binders.union(&self.used).cloned().collect();
        normalize_binders(&ren.apply(f), &mut reserved)
    }

    fn go(&mut self, g: &GlobalAssertion, ren: &Substitution) -> GlobalAssertion {
        match g {
            GlobalAssertion::Prefix(i, cont) => {
                let mut inner = ren.clone();
                let vars = self.bind(&i.vars, &mut inner);
                let pred = self.formula(&i.pred, &inner);
                let cont = self.go(cont, &inner);
                GlobalAssertion::Prefix(
                    Interaction { sender: i.sender.clone(), receiver: i.receiver.clone(), vars, pred },
                    Box::new(cont),
                )
            }
            GlobalAssertion::Branching { selector, receiver, branches } => GlobalAssertion::Branching {
                selector: selector.clone(),
                receiver: receiver.clone(),
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        guard: self.formula(&b.guard, ren),
                        label: b.label.clone(),
                        cont: self.go(&b.cont, ren),
                    })
                    .collect(),
            },
            GlobalAssertion::RecDef { name, init, params, invariant, body } => {
                let init = init.iter().map(|e| ren.apply_expr(e)).collect();
                let mut inner = ren.clone();
                let params = self.bind(params, &mut inner);
                let invariant = self.formula(invariant, &inner);
                let body = self.go(body, &inner);
                GlobalAssertion::RecDef { name: name.clone(), init, params, invariant, body: Box::new(body) }
            }
            GlobalAssertion::RecCall { name, args } => GlobalAssertion::RecCall {
                name: name.clone(),
                args: args.iter().map(|e| ren.apply_expr(e)).collect(),
            },
            GlobalAssertion::End => GlobalAssertion::End,
        }
    }
}

/// Renames binders so that every interaction variable and recursion
/// parameter is bound once, and quantified names differ from all of them.
/// Renamed copies get tick suffixes (`v'`, `v''`). Already normalized
/// assertions are returned unchanged.
pub fn normalize(g: &GlobalAssertion) -> GlobalAssertion {
    let t = g.tree();
    let binders = t.ids().flat_map(|n| t.introduced(n).to_vec()).collect();
    let mut n = Normalizer { used: BTreeSet::new(), avoid: t.all_names(), binders };
    n.go(g, &Substitution::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn increasing() -> GlobalAssertion {
        GlobalAssertion::seq(
            vec![
                Interaction::new("Alice", "Bob", &["a"], Formula::gt("a", 0)),
                Interaction::new("Bob", "Carol", &["b"], Formula::gt("b", "a")),
            ],
            GlobalAssertion::End,
        )
    }

    #[test]
    fn well_formed_example_has_no_defects() {
        assert!(check_well_formed(&increasing()).is_empty());
        assert!(check_well_formed(&GlobalAssertion::End).is_empty());
    }

    #[test]
    fn open_assertion_is_reported() {
        let g = GlobalAssertion::prefix(
            Interaction::new("Alice", "Bob", &["x"], Formula::gt("y", 0)),
            GlobalAssertion::End,
        );
        assert_eq!(
            check_well_formed(&g),
            vec![Defect::UnboundVariable { var: "y".into(), node: NodeId(1) }]
        );
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let g = GlobalAssertion::RecDef {
            name: "t".into(),
            init: vec![Expr::int(1)],
            params: vec!["v".into()],
            invariant: Formula::True,
            body: Box::new(GlobalAssertion::RecCall {
                name: "t".into(),
                args: vec![Expr::var("v"), Expr::var("v")],
            }),
        };
        let d = check_well_formed(&g);
        assert!(d.iter().any(|d| matches!(d, Defect::ArityMismatch { found: 2, expected: 1, .. })));
        assert!(d.iter().any(|d| matches!(d, Defect::UnguardedCall { .. })));
    }

    #[test]
    fn other_defects() {
        let g = GlobalAssertion::prefix(
            Interaction::new("A", "A", &["x", "x"], Formula::True),
            GlobalAssertion::RecCall { name: "s".into(), args: vec![] },
        );
        let d = check_well_formed(&g);
        assert!(d.contains(&Defect::SenderEqualsReceiver { node: NodeId(1) }));
        assert!(d.contains(&Defect::DuplicateVariable { var: "x".into(), node: NodeId(1) }));
        assert!(d.contains(&Defect::UnknownRecursion { name: "s".into(), node: NodeId(2) }));
        let clash = GlobalAssertion::prefix(
            Interaction::new("A", "B", &["A"], Formula::True),
            GlobalAssertion::End,
        );
        assert_eq!(
            check_well_formed(&clash),
            vec![Defect::ParticipantVariableClash { name: "A".into(), node: NodeId(1) }]
        );
    }

    #[test]
    fn normalization_renames_rebinding() {
        let g = GlobalAssertion::seq(
            vec![
                Interaction::new("A", "B", &["v"], Formula::gt("v", 0)),
                Interaction::new("B", "A", &["v"], Formula::gt("v", 1)),
                Interaction::new("A", "B", &["w"], Formula::gt("w", "v").and(Formula::exists(vec!["w".into()], Formula::gt("w", 0)))),
            ],
            GlobalAssertion::End,
        );
        let n = normalize(&g);
        let expected = GlobalAssertion::seq(
            vec![
                Interaction::new("A", "B", &["v"], Formula::gt("v", 0)),
                Interaction::new("B", "A", &["v'"], Formula::gt("v'", 1)),
                Interaction::new("A", "B", &["w"], Formula::gt("w", "v'").and(Formula::exists(vec!["w'".into()], Formula::gt("w'", 0)))),
            ],
            GlobalAssertion::End,
        );
        assert_eq!(n, expected);
        assert_eq!(normalize(&increasing()), increasing());
    }
}
