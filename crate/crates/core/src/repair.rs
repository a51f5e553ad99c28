//! Results shared by the repair algorithms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::{GlobalAssertion, Label, NodeId};
use crate::logic::LogicError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Phi1,
    Phi2,
    Phi3,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Phi1 => "phi1",
            Algorithm::Phi2 => "phi2",
            Algorithm::Phi3 => "phi3",
        })
    }
}

/// One rewritten node label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub node: NodeId,
    pub algorithm: Algorithm,
    pub before: Label,
    pub after: Label,
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}  ~>  {}", self.algorithm, self.node, self.before, self.after)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailReason {
    /// No rewrite of the algorithm applies at the node.
    NotApplicable,
    /// A decision procedure gave up or failed, so the node was left alone.
    Solver(LogicError),
    /// The iteration bound was reached.
    FuelExhausted,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailReason::NotApplicable => f.write_str("no applicable repair"),
            FailReason::Solver(e) => write!(f, "solver error: {e}"),
            FailReason::FuelExhausted => f.write_str("iteration bound reached"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepairOutcome {
    Fixed { assertion: GlobalAssertion, changes: Vec<Change> },
    Unchanged,
    /// `assertion` is the most improved assertion reached before failing at
    /// `node`.
    Failed { assertion: GlobalAssertion, node: NodeId, changes: Vec<Change>, reason: FailReason },
}

impl RepairOutcome {
    /// The resulting assertion, `original` when nothing changed.
    pub fn assertion_or<'a>(&'a self, original: &'a GlobalAssertion) -> &'a GlobalAssertion {
        match self {
            RepairOutcome::Fixed { assertion, .. } | RepairOutcome::Failed { assertion, .. } => assertion,
            RepairOutcome::Unchanged => original,
        }
    }

    pub fn changes(&self) -> &[Change] {
        match self {
            RepairOutcome::Fixed { changes, .. } | RepairOutcome::Failed { changes, .. } => changes,
            RepairOutcome::Unchanged => &[],
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, RepairOutcome::Fixed { .. })
    }

    pub fn failed_at(&self) -> Option<NodeId> {
        match self {
            RepairOutcome::Failed { node, .. } => Some(*node),
            _ => None,
        }
    }
}

/// Drives a single-step repair to a fixpoint. `step` returns `Unchanged`
/// when the assertion is clean.
pub(crate) fn iterate(
    g: &GlobalAssertion,
    fuel: usize,
    mut step: impl FnMut(&GlobalAssertion) -> RepairOutcome,
) -> RepairOutcome {
    let mut current = g.clone();
    let mut log = Vec::new();
    for _ in 0..fuel {
        match step(&current) {
            RepairOutcome::Unchanged => {
                return if log.is_empty() {
                    RepairOutcome::Unchanged
                } else {
                    RepairOutcome::Fixed { assertion: current, changes: log }
                };
            }
            RepairOutcome::Fixed { assertion, changes } => {
                log.extend(changes);
                current = assertion;
            }
            RepairOutcome::Failed { node, changes, reason, .. } => {
                log.extend(changes);
                return RepairOutcome::Failed { assertion: current, node, changes: log, reason };
            }
        }
    }
    let node = log.last().map(|c: &Change| c.node).unwrap_or(NodeId(1));
    RepairOutcome::Failed { assertion: current, node, changes: log, reason: FailReason::FuelExhausted }
}
