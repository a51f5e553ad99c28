use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AstError, Branch, GlobalAssertion, Interaction, NodeId, Participant};
use crate::logic::{Expr, Formula};

/// The label carried by a tree node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Label {
    Interaction(Interaction),
    /// `s -> r` heading a branching; its children are guard nodes.
    Selector { selector: Participant, receiver: Participant },
    /// `{guard} label`
    Guard { guard: Formula, label: String },
    RecDef { name: String, init: Vec<Expr>, params: Vec<String>, invariant: Formula },
    RecCall { name: String, args: Vec<Expr> },
    End,
}

impl Label {
    pub fn kind(&self) -> &'static str {
        match self {
            Label::Interaction(_) => "interaction",
            Label::Selector { .. } => "selector",
            Label::Guard { .. } => "guard",
            Label::RecDef { .. } => "recDef",
            Label::RecCall { .. } => "recCall",
            Label::End => "end",
        }
    }

    /// An interaction's assertion, a guard, or a recursion invariant; `true`
    /// for the other labels.
    pub fn predicate(&self) -> Formula {
        match self {
            Label::Interaction(i) => i.pred.clone(),
            Label::Guard { guard, .. } => guard.clone(),
            Label::RecDef { invariant, .. } => invariant.clone(),
            _ => Formula::True,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |es: &[Expr]| es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            Label::Interaction(i) => {
                write!(f, "{} -> {} : ({} | {})", i.sender, i.receiver, i.vars.join(" "), i.pred)
            }
            Label::Selector { selector, receiver } => write!(f, "choice {selector} -> {receiver}"),
            Label::Guard { guard, label } => write!(f, "{{{guard}}} {label}"),
            Label::RecDef { name, init, params, invariant } => {
                write!(f, "rec {name}<{}>({} | {invariant})", list(init), params.join(" "))
            }
            Label::RecCall { name, args } => write!(f, "{name}<{}>", list(args)),
            Label::End => f.write_str("end"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: Label,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

/// Node-addressed view of a global assertion. Nodes are stored in preorder,
/// so `NodeId(i)` lives at index `i - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssertionTree {
    nodes: Vec<Node>,
}

impl AssertionTree {
    pub fn from_assertion(g: &GlobalAssertion) -> Self {
        let mut t = AssertionTree { nodes: Vec::new() };
        t.build(g, None);
        t
    }

    fn push(&mut self, label: Label, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len() + 1);
        self.nodes.push(Node { id, label, parent, children: Vec::new() });
        if let Some(p) = parent {
            self.nodes[p.0 - 1].children.push(id);
        }
        id
    }

    fn build(&mut self, g: &GlobalAssertion, parent: Option<NodeId>) -> NodeId {
        match g {
            GlobalAssertion::Prefix(i, cont) => {
                let id = self.push(Label::Interaction(i.clone()), parent);
                self.build(cont, Some(id));
                id
            }
            GlobalAssertion::Branching { selector, receiver, branches } => {
                let id = self.push(
                    Label::Selector { selector: selector.clone(), receiver: receiver.clone() },
                    parent,
                );
                for b in branches {
                    let gid = self.push(
                        Label::Guard { guard: b.guard.clone(), label: b.label.clone() },
                        Some(id),
                    );
                    self.build(&b.cont, Some(gid));
                }
                id
            }
            GlobalAssertion::RecDef { name, init, params, invariant, body } => {
                let id = self.push(
                    Label::RecDef {
                        name: name.clone(),
                        init: init.clone(),
                        params: params.clone(),
                        invariant: invariant.clone(),
                    },
                    parent,
                );
                self.build(body, Some(id));
                id
            }
            GlobalAssertion::RecCall { name, args } => {
                self.push(Label::RecCall { name: name.clone(), args: args.clone() }, parent)
            }
            GlobalAssertion::End => self.push(Label::End, parent),
        }
    }

    /// Reads the assertion back from the labels in preorder.
    pub fn to_assertion(&self) -> GlobalAssertion {
        self.assertion_at(self.root())
    }

    fn assertion_at(&self, id: NodeId) -> GlobalAssertion {
        let n = &self.nodes[id.0 - 1];
        let child = |k: usize| self.assertion_at(n.children[k]);
        match &n.label {
            Label::Interaction(i) => GlobalAssertion::Prefix(i.clone(), Box::new(child(0))),
            Label::Selector { selector, receiver } => GlobalAssertion::Branching {
                selector: selector.clone(),
                receiver: receiver.clone(),
                branches: n
                    .children
                    .iter()
                    .map(|g| {
                        let gn = &self.nodes[g.0 - 1];
                        let Label::Guard { guard, label } = &gn.label else {
                            unreachable!("selector children are guards")
                        };
                        Branch {
                            guard: guard.clone(),
                            label: label.clone(),
                            cont: self.assertion_at(gn.children[0]),
                        }
                    })
                    .collect(),
            },
            Label::Guard { .. } => unreachable!("guard nodes are read through their selector"),
            Label::RecDef { name, init, params, invariant } => GlobalAssertion::RecDef {
                name: name.clone(),
                init: init.clone(),
                params: params.clone(),
                invariant: invariant.clone(),
                body: Box::new(child(0)),
            },
            Label::RecCall { name, args } => {
                GlobalAssertion::RecCall { name: name.clone(), args: args.clone() }
            }
            Label::End => GlobalAssertion::End,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        NodeId(1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (1..=self.nodes.len()).map(NodeId)
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        if id.0 == 0 {
            return None;
        }
        self.nodes.get(id.0 - 1)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, AstError> {
        self.get(id).ok_or(AstError::NodeNotFound(id))
    }

    pub fn label(&self, id: NodeId) -> &Label {
        &self.nodes[id.0 - 1].label
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0 - 1].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0 - 1].children
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children(id).is_empty()
    }

    /// Nodes from the root down to `id`, inclusive.
    pub fn path(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Strict ancestors of `id`, root first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut p = self.path(id);
        p.pop();
        p
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.path(id).len() - 1
    }

    /// `id` and its descendants in preorder.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    /// The predicate attached to the node: an interaction's assertion, a
    /// guard, or a recursion invariant; `true` for the other labels.
    pub fn predicate(&self, id: NodeId) -> Formula {
        self.label(id).predicate()
    }

    /// Conjunction of the predicates of the strict ancestors of `id`, root
    /// first; `true` at the root.
    pub fn context(&self, id: NodeId) -> Formula {
        Formula::conjunction_skip_true(self.ancestors(id).into_iter().map(|a| self.predicate(a)))
    }

    /// Variables exchanged by an interaction node.
    pub fn vars(&self, id: NodeId) -> &[String] {
        match self.label(id) {
            Label::Interaction(i) => &i.vars,
            _ => &[],
        }
    }

    /// Variables bound by the node: interaction variables or recursion
    /// parameters.
    pub fn introduced(&self, id: NodeId) -> &[String] {
        match self.label(id) {
            Label::Interaction(i) => &i.vars,
            Label::RecDef { params, .. } => params,
            _ => &[],
        }
    }

    pub fn sender(&self, id: NodeId) -> Option<&Participant> {
        match self.label(id) {
            Label::Interaction(i) => Some(&i.sender),
            Label::Selector { selector, .. } => Some(selector),
            _ => None,
        }
    }

    pub fn receiver(&self, id: NodeId) -> Option<&Participant> {
        match self.label(id) {
            Label::Interaction(i) => Some(&i.receiver),
            Label::Selector { receiver, .. } => Some(receiver),
            _ => None,
        }
    }

    /// The party guaranteeing the node's predicate: the sender of an
    /// interaction or the selector of a guard's branching.
    pub fn responsible(&self, id: NodeId) -> Option<&Participant> {
        match self.label(id) {
            Label::Interaction(i) => Some(&i.sender),
            Label::Guard { .. } => self.parent(id).and_then(|p| self.sender(p)),
            _ => None,
        }
    }

    /// The innermost enclosing definition of the recursion called at `id`.
    pub fn binder(&self, id: NodeId) -> Option<NodeId> {
        let Label::RecCall { name, .. } = self.label(id) else {
            return None;
        };
        self.ancestors(id)
            .into_iter()
            .rev()
            .find(|a| matches!(self.label(*a), Label::RecDef { name: n, .. } if n == name))
    }

    /// Calls in the body of the definition at `def` that resolve to it.
    pub fn calls_of(&self, def: NodeId) -> Vec<NodeId> {
        self.subtree(def)
            .into_iter()
            .filter(|n| matches!(self.label(*n), Label::RecCall { .. }) && self.binder(*n) == Some(def))
            .collect()
    }

    /// The node on the path to `at` (inclusive) that binds `var`, nearest
    /// first.
    pub fn introducer(&self, var: &str, at: NodeId) -> Option<NodeId> {
        self.path(at)
            .into_iter()
            .rev()
            .find(|n| self.introduced(*n).iter().any(|v| v == var))
    }

    /// Variables bound on the path to `at`, in order of introduction.
    pub fn scope(&self, at: NodeId) -> Vec<String> {
        self.path(at).into_iter().flat_map(|n| self.introduced(n).to_vec()).collect()
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            match &n.label {
                Label::Interaction(i) => {
                    out.insert(i.sender.clone());
                    out.insert(i.receiver.clone());
                }
                Label::Selector { selector, receiver } => {
                    out.insert(selector.clone());
                    out.insert(receiver.clone());
                }
                _ => {}
            }
        }
        out
    }

    /// Every variable name bound anywhere or occurring in any formula or
    /// expression.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            out.extend(self.introduced(n.id).iter().cloned());
            out.extend(self.predicate(n.id).all_vars());
            match &n.label {
                Label::RecDef { init: es, .. } | Label::RecCall { args: es, .. } => {
                    for e in es {
                        out.extend(e.vars());
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// A copy with the label of `id` replaced.
    pub fn with_label(&self, id: NodeId, label: Label) -> AssertionTree {
        let mut t = self.clone();
        t.nodes[id.0 - 1].label = label;
        t
    }

    /// A copy with the predicate of `id` replaced. Nodes without a predicate
    /// are returned unchanged.
    pub fn with_predicate(&self, id: NodeId, pred: Formula) -> AssertionTree {
        let label = match self.label(id).clone() {
            Label::Interaction(mut i) => {
                i.pred = pred;
                Label::Interaction(i)
            }
            Label::Guard { label, .. } => Label::Guard { guard: pred, label },
            Label::RecDef { name, init, params, .. } => {
                Label::RecDef { name, init, params, invariant: pred }
            }
            other => other,
        };
        self.with_label(id, label)
    }

    /// Parent links and label kinds; equal shapes mean isomorphic trees.
    pub fn shape(&self) -> Vec<(Option<NodeId>, &'static str)> {
        self.nodes.iter().map(|n| (n.parent, n.label.kind())).collect()
    }
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
    fn end_is_a_single_node() {
        let t = GlobalAssertion::End.tree();
        assert_eq!(t.len(), 1);
        assert_eq!(t.label(t.root()), &Label::End);
        assert_eq!(t.to_assertion(), GlobalAssertion::End);
    }

    #[test]
    fn prefixes_form_a_chain() {
        let g = increasing();
        let t = g.tree();
        assert_eq!(t.len(), 3);
        assert_eq!(t.children(NodeId(1)), &[NodeId(2)]);
        assert_eq!(t.children(NodeId(2)), &[NodeId(3)]);
        assert_eq!(t.to_assertion(), g);
        assert_eq!(t.context(NodeId(1)), Formula::True);
        assert_eq!(t.context(NodeId(3)), Formula::gt("a", 0).and(Formula::gt("b", "a")));
        assert_eq!(t.context(NodeId(2)), Formula::gt("a", 0));
    }

    #[test]
    fn branching_gets_guard_children() {
        let g = GlobalAssertion::prefix(
            Interaction::new("p", "q", &["v"], Formula::True),
            GlobalAssertion::Branching {
                selector: "p".into(),
                receiver: "q".into(),
                branches: vec![
                    Branch { guard: Formula::gt("v", 5), label: "l1".into(), cont: GlobalAssertion::End },
                    Branch { guard: Formula::lt("v", 5), label: "l2".into(), cont: GlobalAssertion::End },
                ],
            },
        );
        let t = g.tree();
        assert_eq!(t.len(), 6);
        assert_eq!(t.label(NodeId(2)).kind(), "selector");
        assert_eq!(t.children(NodeId(2)), &[NodeId(3), NodeId(5)]);
        assert_eq!(t.label(NodeId(3)).kind(), "guard");
        assert_eq!(t.responsible(NodeId(3)), Some(&Participant::new("p")));
        assert_eq!(t.context(NodeId(4)), Formula::gt("v", 5));
        assert_eq!(t.to_assertion(), g);
    }

    #[test]
    fn calls_resolve_to_innermost_definition() {
        let call = GlobalAssertion::RecCall { name: "t".into(), args: vec![Expr::var("w")] };
        let inner = GlobalAssertion::RecDef {
            name: "t".into(),
            init: vec![Expr::int(0)],
            params: vec!["w".into()],
            invariant: Formula::True,
            body: Box::new(GlobalAssertion::prefix(
                Interaction::new("a", "b", &["x"], Formula::True),
                call,
            )),
        };
        let outer = GlobalAssertion::RecDef {
            name: "t".into(),
            init: vec![Expr::int(1)],
            params: vec!["v".into()],
            invariant: Formula::True,
            body: Box::new(inner),
        };
        let t = outer.tree();
        assert_eq!(t.binder(NodeId(4)), Some(NodeId(2)));
        assert_eq!(t.calls_of(NodeId(2)), vec![NodeId(4)]);
        assert!(t.calls_of(NodeId(1)).is_empty());
    }
}
