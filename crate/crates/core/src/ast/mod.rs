//! Global assertions, their tree view and the static relations over them.

mod knows;
mod tree;
mod wf;

pub use knows::{knows, knows_at};
pub use tree::{AssertionTree, Label, Node};
pub use wf::{check_well_formed, normalize, Defect};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Expr, Formula};

/// A protocol role.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Participant(pub String);

impl Participant {
    pub fn new(name: impl Into<String>) -> Self {
        Participant(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Participant {
    fn from(s: &str) -> Self {
        Participant(s.to_string())
    }
}

/// Position of a node in the preorder numbering of an assertion tree,
/// starting from 1 at the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// `sender -> receiver : (vars | pred)`
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub sender: Participant,
    pub receiver: Participant,
    pub vars: Vec<String>,
    pub pred: Formula,
}

impl Interaction {
    pub fn new(
        sender: impl Into<Participant>,
        receiver: impl Into<Participant>,
        vars: &[&str],
        pred: Formula,
    ) -> Self {
        Interaction {
            sender: sender.into(),
            receiver: receiver.into(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
            pred,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub guard: Formula,
    pub label: String,
    pub cont: GlobalAssertion,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlobalAssertion {
    Prefix(Interaction, Box<GlobalAssertion>),
    Branching {
        selector: Participant,
        receiver: Participant,
        branches: Vec<Branch>,
    },
    RecDef {
        name: String,
        init: Vec<Expr>,
        params: Vec<String>,
        invariant: Formula,
        body: Box<GlobalAssertion>,
    },
    RecCall {
        name: String,
        args: Vec<Expr>,
    },
    End,
}

impl GlobalAssertion {
    pub fn prefix(i: Interaction, cont: GlobalAssertion) -> Self {
        GlobalAssertion::Prefix(i, Box::new(cont))
    }

    /// Builds a sequence of prefixes ending in `last`.
    pub fn seq(items: Vec<Interaction>, last: GlobalAssertion) -> Self {
        items.into_iter().rev().fold(last, |acc, i| GlobalAssertion::prefix(i, acc))
    }

    /// The underlying global type.
    pub fn erase(&self) -> GlobalType {
        match self {
            GlobalAssertion::Prefix(i, cont) => GlobalType::Prefix {
                sender: i.sender.clone(),
                receiver: i.receiver.clone(),
                vars: i.vars.clone(),
                cont: Box::new(cont.erase()),
            },
            GlobalAssertion::Branching { selector, receiver, branches } => GlobalType::Branching {
                selector: selector.clone(),
                receiver: receiver.clone(),
                branches: branches.iter().map(|b| (b.label.clone(), b.cont.erase())).collect(),
            },
            GlobalAssertion::RecDef { name, init, params, body, .. } => GlobalType::RecDef {
                name: name.clone(),
                init: init.clone(),
                params: params.clone(),
                body: Box::new(body.erase()),
            },
            GlobalAssertion::RecCall { name, args } => {
                GlobalType::RecCall { name: name.clone(), args: args.clone() }
            }
            GlobalAssertion::End => GlobalType::End,
        }
    }

    pub fn tree(&self) -> AssertionTree {
        AssertionTree::from_assertion(self)
    }
}

/// A global assertion with every predicate removed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlobalType {
    Prefix {
        sender: Participant,
        receiver: Participant,
        vars: Vec<String>,
        cont: Box<GlobalType>,
    },
    Branching {
        selector: Participant,
        receiver: Participant,
        branches: Vec<(String, GlobalType)>,
    },
    RecDef {
        name: String,
        init: Vec<Expr>,
        params: Vec<String>,
        body: Box<GlobalType>,
    },
    RecCall {
        name: String,
        args: Vec<Expr>,
    },
    End,
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |es: &[Expr]| es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            GlobalType::Prefix { sender, receiver, vars, cont } => {
                write!(f, "{sender} -> {receiver} : ({}) . {cont}", vars.join(" "))
            }
            GlobalType::Branching { selector, receiver, branches } => {
                write!(f, "choice {selector} -> {receiver} {{ ")?;
                for (i, (l, g)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ; ")?;
                    }
                    write!(f, "{l} : {g}")?;
                }
                f.write_str(" }")
            }
            GlobalType::RecDef { name, init, params, body } => {
                write!(f, "rec {name}<{}>({}) . {body}", list(init), params.join(" "))
            }
            GlobalType::RecCall { name, args } => write!(f, "{name}<{}>", list(args)),
            GlobalType::End => f.write_str("end"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AstError {
    #[error("node {0} does not exist")]
    NodeNotFound(NodeId),
}
