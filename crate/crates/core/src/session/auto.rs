use serde::Serialize;

use super::{AmendSession, HistoryEntry, SessionError, Violation};
use crate::ast::GlobalAssertion;
use crate::ts::ConflictReport;

/// A violation left after automatic amendment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Unresolved {
    pub violation: Violation,
    pub diagnostics: Option<ConflictReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AutoReport {
    #[serde(skip)]
    pub assertion: GlobalAssertion,
    pub text: String,
    pub applied: Vec<HistoryEntry>,
    pub unresolved: Vec<Unresolved>,
}

impl AutoReport {
    pub fn is_clean(&self) -> bool {
        self.unresolved.is_empty()
    }
}

/// Repeatedly applies, to the first violation that has any option, its
/// most preferred option: strengthening, then propagation, then lifting
/// (the disjunction for branchings). Stops when no violation has options.
pub fn auto_amend(session: &mut AmendSession) -> Result<AutoReport, SessionError> {
    let fuel = 10 * session.current().tree().len() + 10;
    for _ in 0..fuel {
        let mut chosen = None;
        for v in session.violations() {
            let candidates = session.options(&v.id)?;
            if let Some(best) = candidates.options.into_iter().min_by(|a, b| a.tag.cmp(&b.tag)) {
                chosen = Some(best.id);
                break;
            }
        }
        let Some(id) = chosen else { break };
        session.apply(&id)?;
    }
    let mut unresolved = Vec::new();
    for v in session.violations() {
        let diagnostics = session.options(&v.id)?.diagnostics;
        unresolved.push(Unresolved { violation: v.clone(), diagnostics });
    }
    Ok(AutoReport {
        assertion: session.current().clone(),
        text: session.text(),
        applied: session.history().to_vec(),
        unresolved,
    })
}
