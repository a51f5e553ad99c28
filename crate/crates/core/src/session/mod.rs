//! The amendment loop: diagnose, offer candidate repairs, apply the chosen
//! one, repeat. Keeps an undoable history and a JSON-lines audit log.

mod auto;
mod options;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use auto::{auto_amend, AutoReport, Unresolved};
pub use options::{Candidates, Edit, RepairChoice, Warning};

use crate::ast::{check_well_formed, Defect, GlobalAssertion, NodeId, Participant};
use crate::hs::hs_violations_in;
use crate::logic::{LogicError, Solver};
use crate::parser::{parse, print, SourceSpan, SyntaxError};
use crate::repair::Change;
use crate::ts::{ts_violations_in, TsKind};
use options::{candidate_repairs, spans_of, strengthened};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    #[serde(rename = "HS")]
    Hs,
    #[serde(rename = "TS")]
    Ts,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Hs => "HS",
            ViolationKind::Ts => "TS",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    /// `hs-<node>` or `ts-<node>`.
    pub id: String,
    pub kind: ViolationKind,
    pub node: NodeId,
    pub span: SourceSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub responsible: Option<Participant>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unknown_vars: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts_kind: Option<TsKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obligation: Option<String>,
    pub message: String,
}

/// HS problems first, then TS problems, each in preorder. Spans refer to
/// `text`, the source `g` was parsed from.
pub fn diagnose_text(g: &GlobalAssertion, text: &str, solver: &dyn Solver) -> Result<Vec<Violation>, LogicError> {
    let t = g.tree();
    let spans = spans_of(text);
    let span = |n: NodeId| spans.get(n.0 - 1).copied().unwrap_or_default();
    let mut out = Vec::new();
    for v in hs_violations_in(&t) {
        let vars: Vec<String> = v.unknown_vars.into_iter().collect();
        out.push(Violation {
            id: format!("hs-{}", v.node.0),
            kind: ViolationKind::Hs,
            node: v.node,
            span: span(v.node),
            message: format!("{} does not know {} at line {}", v.responsible, vars.join(", "), span(v.node).line),
            responsible: Some(v.responsible),
            unknown_vars: vars,
            ts_kind: None,
            obligation: None,
        });
    }
    for v in ts_violations_in(&t, solver)? {
        let line = span(v.node).line;
        let message = match v.kind {
            TsKind::Interaction => format!("line {line}: earlier choices can leave no values satisfying {}", v.obligation),
            TsKind::Branching => format!("line {line}: earlier choices can leave no branch enabled ({})", v.obligation),
            TsKind::RecDef => format!("line {line}: the initial values may violate the invariant ({})", v.obligation),
            TsKind::RecCall => format!("line {line}: the call arguments may violate the invariant ({})", v.obligation),
        };
        out.push(Violation {
            id: format!("ts-{}", v.node.0),
            kind: ViolationKind::Ts,
            node: v.node,
            span: span(v.node),
            responsible: t.responsible(v.node).cloned(),
            unknown_vars: Vec::new(),
            ts_kind: Some(v.kind),
            obligation: Some(v.obligation.to_string()),
            message,
        });
    }
    Ok(out)
}

pub fn diagnose(g: &GlobalAssertion, solver: &dyn Solver) -> Result<Vec<Violation>, LogicError> {
    diagnose_text(g, &print(g), solver)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RepairTag {
    Phi1,
    Phi2,
    Phi3Lift,
    Phi3BranchDisjunction,
    Phi3BranchSingle(String),
}

impl fmt::Display for RepairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepairTag::Phi1 => f.write_str("phi1"),
            RepairTag::Phi2 => f.write_str("phi2"),
            RepairTag::Phi3Lift => f.write_str("phi3-lift"),
            RepairTag::Phi3BranchDisjunction => f.write_str("phi3-branch-disjunction"),
            RepairTag::Phi3BranchSingle(l) => write!(f, "phi3-branch-single({l})"),
        }
    }
}

impl Serialize for RepairTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RepairTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.as_str() {
            "phi1" => RepairTag::Phi1,
            "phi2" => RepairTag::Phi2,
            "phi3-lift" => RepairTag::Phi3Lift,
            "phi3-branch-disjunction" => RepairTag::Phi3BranchDisjunction,
            other => match other.strip_prefix("phi3-branch-single(").and_then(|r| r.strip_suffix(')')) {
                Some(l) => RepairTag::Phi3BranchSingle(l.to_string()),
                None => return Err(serde::de::Error::custom(format!("unknown repair tag {other}"))),
            },
        })
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("ill-formed assertion: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    IllFormed(Vec<Defect>),
    #[error(transparent)]
    Solver(#[from] LogicError),
    #[error("unknown violation {0}")]
    UnknownViolation(String),
    #[error("unknown option {0}")]
    UnknownChoice(String),
    #[error("option {0} was offered for an earlier version of the assertion")]
    StaleChoice(String),
    #[error("nothing to undo")]
    EmptyHistory,
    #[error("snapshot does not replay: {0}")]
    BadSnapshot(String),
}

/// One applied repair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryEntry {
    pub option_id: String,
    pub violation: String,
    pub tag: RepairTag,
    pub changes: Vec<Change>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditEntry {
    pub event: String,
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub option: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub before: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub after: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl AuditEntry {
    fn new(event: &str) -> Self {
        AuditEntry {
            event: event.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            node: None,
            algorithm: None,
            option: None,
            before: None,
            after: None,
            message: None,
        }
    }
}

/// Everything needed to rebuild a session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub source: String,
    pub history: Vec<HistoryEntry>,
    pub audit: Vec<AuditEntry>,
}

/// Short hash of an assertion's canonical text.
pub fn fingerprint(g: &GlobalAssertion) -> String {
    let digest = Sha256::digest(print(g).as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn apply_changes(g: &GlobalAssertion, changes: &[Change]) -> GlobalAssertion {
    let mut t = g.tree();
    for c in changes {
        t = t.with_label(c.node, c.after.clone());
    }
    t.to_assertion()
}

pub struct AmendSession {
    solver: Arc<dyn Solver>,
    source: String,
    initial: GlobalAssertion,
    /// Assertions before each applied repair.
    states: Vec<GlobalAssertion>,
    history: Vec<HistoryEntry>,
    current: GlobalAssertion,
    violations: Vec<Violation>,
    audit: Vec<AuditEntry>,
}

impl fmt::Debug for AmendSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmendSession")
            .field("solver", &self.solver.name())
            .field("current", &print(&self.current))
            .field("history", &self.history.len())
            .finish()
    }
}

impl AmendSession {
    /// Parses and diagnoses `source`.
    pub fn from_source(source: &str, solver: Arc<dyn Solver>) -> Result<Self, SessionError> {
        let parsed = parse(source)?;
        let defects = check_well_formed(&parsed.assertion);
        if !defects.is_empty() {
            return Err(SessionError::IllFormed(defects));
        }
        let violations = diagnose_text(&parsed.assertion, source, solver.as_ref())?;
        let mut created = AuditEntry::new("create");
        created.after = Some(print(&parsed.assertion));
        created.message = Some(format!("{} violation(s)", violations.len()));
        Ok(AmendSession {
            solver,
            source: source.to_string(),
            initial: parsed.assertion.clone(),
            states: Vec::new(),
            history: Vec::new(),
            current: parsed.assertion,
            violations,
            audit: vec![created],
        })
    }

    pub fn new(g: GlobalAssertion, solver: Arc<dyn Solver>) -> Result<Self, SessionError> {
        Self::from_source(&print(&g), solver)
    }

    pub fn solver(&self) -> &dyn Solver {
        self.solver.as_ref()
    }

    pub fn initial(&self) -> &GlobalAssertion {
        &self.initial
    }

    pub fn current(&self) -> &GlobalAssertion {
        &self.current
    }

    /// The current assertion as text: the original source until something
    /// is applied, the canonical print afterwards.
    pub fn text(&self) -> String {
        if self.history.is_empty() {
            self.source.clone()
        } else {
            print(&self.current)
        }
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn audit_jsonl(&self) -> String {
        self.audit.iter().map(|e| serde_json::to_string(e).expect("audit entries serialize") + "\n").collect()
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.current)
    }

    pub fn violation(&self, id: &str) -> Option<&Violation> {
        self.violations.iter().find(|v| v.id == id)
    }

    fn earlier_changes(&self) -> Vec<Change> {
        self.history.iter().flat_map(|h| h.changes.iter().cloned()).collect()
    }

    /// Candidate repairs for one of the current violations.
    pub fn options(&self, violation: &str) -> Result<Candidates, SessionError> {
        let v = self.violation(violation).ok_or_else(|| SessionError::UnknownViolation(violation.to_string()))?;
        let earlier = strengthened(&self.earlier_changes());
        Ok(candidate_repairs(&self.current, &self.text(), v, &self.fingerprint(), &earlier, self.solver.as_ref())?)
    }

    /// Applies an option previously returned by [`AmendSession::options`]
    /// for the current assertion.
    pub fn apply(&mut self, option_id: &str) -> Result<RepairChoice, SessionError> {
        let mut parts = option_id.splitn(3, '.');
        let (Some(fp), Some(vid), Some(_)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SessionError::UnknownChoice(option_id.to_string()));
        };
        if fp != self.fingerprint() {
            return Err(SessionError::StaleChoice(option_id.to_string()));
        }
        if self.violation(vid).is_none() {
            return Err(SessionError::UnknownChoice(option_id.to_string()));
        }
        let candidates = self.options(vid)?;
        let choice = candidates
            .options
            .into_iter()
            .find(|o| o.id == option_id)
            .ok_or_else(|| SessionError::UnknownChoice(option_id.to_string()))?;
        for c in &choice.changes {
            let mut e = AuditEntry::new("apply");
            e.node = Some(c.node);
            e.algorithm = Some(choice.tag.to_string());
            e.option = Some(choice.id.clone());
            e.before = Some(c.before.predicate().to_string());
            e.after = Some(c.after.predicate().to_string());
            self.audit.push(e);
        }
        for w in &choice.warnings {
            if let Warning::Interference { node, message } = w {
                log::warn!("{message}");
                let mut e = AuditEntry::new("interference");
                e.node = Some(*node);
                e.option = Some(choice.id.clone());
                e.message = Some(message.clone());
                self.audit.push(e);
            }
        }
        let previous = std::mem::replace(&mut self.current, choice.preview.clone());
        self.states.push(previous);
        self.history.push(HistoryEntry {
            option_id: choice.id.clone(),
            violation: choice.violation.clone(),
            tag: choice.tag.clone(),
            changes: choice.changes.clone(),
        });
        self.refresh()?;
        Ok(choice)
    }

    fn refresh(&mut self) -> Result<(), SessionError> {
        let text = self.text();
        self.violations = diagnose_text(&self.current, &text, self.solver.as_ref())?;
        Ok(())
    }

    /// Reverts the last applied repair.
    pub fn undo(&mut self) -> Result<(), SessionError> {
        let previous = self.states.pop().ok_or(SessionError::EmptyHistory)?;
        let entry = self.history.pop().expect("history and states have equal length");
        let mut e = AuditEntry::new("undo");
        e.option = Some(entry.option_id);
        e.algorithm = Some(entry.tag.to_string());
        self.audit.push(e);
        self.current = previous;
        self.refresh()
    }

    /// The current assertion rebuilt from the initial one and the recorded
    /// changes.
    pub fn replay(&self) -> GlobalAssertion {
        self.history.iter().fold(self.initial.clone(), |g, h| apply_changes(&g, &h.changes))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { source: self.source.clone(), history: self.history.clone(), audit: self.audit.clone() }
    }

    pub fn restore(snapshot: &Snapshot, solver: Arc<dyn Solver>) -> Result<Self, SessionError> {
        let mut s = Self::from_source(&snapshot.source, solver)?;
        for h in &snapshot.history {
            let next = apply_changes(&s.current, &h.changes);
            if !check_well_formed(&next).is_empty() {
                return Err(SessionError::BadSnapshot(h.option_id.clone()));
            }
            s.states.push(std::mem::replace(&mut s.current, next));
            s.history.push(h.clone());
        }
        s.audit = snapshot.audit.clone();
        s.refresh()?;
        Ok(s)
    }
}
