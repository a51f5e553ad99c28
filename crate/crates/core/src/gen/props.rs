//! Properties every repair must satisfy, checked on a single assertion.

use std::fmt;

use crate::ast::{AssertionTree, GlobalAssertion, NodeId};
use crate::hs::{hs_violations, phi1, phi2};
use crate::logic::{Formula, LogicError, Solver};
use crate::parser::{parse, print};
use crate::repair::Algorithm;
use crate::ts::{phi3, ts_violations};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    /// Printing then parsing, and tree then assertion, are identities.
    RoundTrip,
    /// Φ1 and Φ3 keep the erased type; Φ2 keeps the shape and only adds
    /// variables.
    Structure,
    /// A repair never breaks HS or TS when the input had it.
    Preservation,
    /// A `Fixed` result passes the checker the repair targets.
    Correctness,
    /// Φ1 only strengthens path conditions.
    Strengthening,
    /// Φ2 path conditions equal the old ones plus equalities on fresh names.
    Propagation,
    /// Φ3 keeps the path condition of every leaf.
    LeafContexts,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::RoundTrip,
        Property::Structure,
        Property::Preservation,
        Property::Correctness,
        Property::Strengthening,
        Property::Propagation,
        Property::LeafContexts,
    ];
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::RoundTrip => "round trip",
            Property::Structure => "structure",
            Property::Preservation => "preservation",
            Property::Correctness => "correctness",
            Property::Strengthening => "strengthening",
            Property::Propagation => "propagation",
            Property::LeafContexts => "leaf contexts",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub property: Property,
    pub input: String,
    pub detail: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}\n{}", self.property, self.detail, self.input)
    }
}

/// Outcome of [`check`] on one assertion.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub counterexamples: Vec<Counterexample>,
    /// Checks abandoned because the solver gave up.
    pub skipped: Vec<(Property, LogicError)>,
    pub hs_clean: bool,
    pub ts_clean: Option<bool>,
    /// Algorithms whose result was `Fixed`.
    pub fixed: Vec<Algorithm>,
}

impl Report {
    pub fn holds(&self, p: Property) -> bool {
        !self.counterexamples.iter().any(|c| c.property == p)
    }

    fn fail(&mut self, property: Property, g: &GlobalAssertion, detail: impl Into<String>) {
        self.counterexamples.push(Counterexample { property, input: print(g), detail: detail.into() });
    }
}

/// Leaves whose path condition Φ3 changed, as `(leaf, before, after)`.
pub fn leaf_context_changes(
    before: &AssertionTree,
    after: &AssertionTree,
    solver: &dyn Solver,
) -> Result<Vec<(NodeId, Formula, Formula)>, LogicError> {
    let mut out = Vec::new();
    for n in before.ids().filter(|n| before.is_leaf(*n)) {
        let (a, b) = (path_condition(before, n), path_condition(after, n));
        if a == b {
            continue;
        }
        let iff = a.clone().implies(b.clone()).and(b.clone().implies(a.clone()));
        if !solver.is_valid(&iff)? {
            out.push((n, a, b));
        }
    }
    Ok(out)
}

fn path_condition(t: &AssertionTree, n: NodeId) -> Formula {
    Formula::conjunction_skip_true([t.context(n), t.predicate(n)])
}

/// First node whose path condition after a repair is not entailed by, or with
/// `fresh` names existentially closed does not entail, the one before.
/// Φ1 passes no fresh names and only the first direction can fail for it.
pub fn path_condition_mismatch(
    before: &AssertionTree,
    after: &AssertionTree,
    fresh: Option<Vec<String>>,
    solver: &dyn Solver,
) -> Result<Option<(NodeId, Formula, Formula)>, LogicError> {
    for n in before.ids() {
        let (a, b) = (path_condition(before, n), path_condition(after, n));
        if a == b {
            continue;
        }
        let mut ok = solver.is_valid(&b.clone().implies(a.clone()))?;
        if let (true, Some(fresh)) = (ok, &fresh) {
            ok = solver.is_valid(&a.clone().implies(Formula::exists(fresh.clone(), b.clone())))?;
        }
        if !ok {
            return Ok(Some((n, a, b)));
        }
    }
    Ok(None)
}

/// Runs every property on `g`.
pub fn check(g: &GlobalAssertion, solver: &dyn Solver) -> Report {
    let mut r = Report::default();
    let t = g.tree();

    match parse(&print(g)) {
        Ok(p) if p.assertion == *g => {}
        Ok(p) => r.fail(Property::RoundTrip, g, format!("reparsed as {}", print(&p.assertion))),
        Err(e) => r.fail(Property::RoundTrip, g, format!("printed text does not parse: {}", e.message)),
    }
    if t.to_assertion() != *g {
        r.fail(Property::RoundTrip, g, "tree does not convert back");
    }

    r.hs_clean = hs_violations(g).is_empty();
    r.ts_clean = match ts_violations(g, solver) {
        Ok(v) => Some(v.is_empty()),
        Err(e) => {
            r.skipped.push((Property::Preservation, e));
            None
        }
    };

    let outcomes =
        [(Algorithm::Phi1, phi1(g, solver)), (Algorithm::Phi2, phi2(g)), (Algorithm::Phi3, phi3(g, solver))];
    for (alg, out) in &outcomes {
        let h = out.assertion_or(g);
        let ht = h.tree();
        if out.is_fixed() {
            r.fixed.push(*alg);
        }

        match alg {
            Algorithm::Phi2 => {
                if ht.shape() != t.shape() {
                    r.fail(Property::Structure, g, "phi2 changed the tree shape");
                } else if let Some(n) = t.ids().find(|n| !t.vars(*n).iter().all(|v| ht.vars(*n).contains(v))) {
                    r.fail(Property::Structure, g, format!("phi2 dropped a variable at {n}"));
                }
            }
            _ => {
                if h.erase() != g.erase() {
                    r.fail(Property::Structure, g, format!("{alg} changed the erased type"));
                }
            }
        }

        let hs_after = hs_violations(h).is_empty();
        if r.hs_clean && !hs_after {
            r.fail(Property::Preservation, g, format!("{alg} introduced an HS violation"));
        }
        let ts_after = if r.ts_clean == Some(true) || (*alg == Algorithm::Phi3 && out.is_fixed()) {
            match ts_violations(h, solver) {
                Ok(v) => Some(v.is_empty()),
                Err(e) => {
                    r.skipped.push((Property::Preservation, e));
                    None
                }
            }
        } else {
            None
        };
        if r.ts_clean == Some(true) && ts_after == Some(false) {
            r.fail(Property::Preservation, g, format!("{alg} introduced a TS violation"));
        }

        if out.is_fixed() {
            let passes = match alg {
                Algorithm::Phi3 => ts_after,
                _ => Some(hs_after),
            };
            if passes == Some(false) {
                r.fail(Property::Correctness, g, format!("{alg} reported Fixed but the result still has violations"));
            }
        }

        if *alg != Algorithm::Phi3 && !out.changes().is_empty() {
            let (property, fresh) = match alg {
                Algorithm::Phi1 => (Property::Strengthening, None),
                _ => {
                    let old = t.all_names();
                    (Property::Propagation, Some(ht.all_names().difference(&old).cloned().collect()))
                }
            };
            match path_condition_mismatch(&t, &ht, fresh, solver) {
                Ok(Some((n, a, b))) => r.fail(property, g, format!("{alg} at {n}: {a}  vs  {b}")),
                Ok(None) => {}
                Err(e) => r.skipped.push((property, e)),
            }
        }

        if *alg == Algorithm::Phi3 && !out.changes().is_empty() {
            match leaf_context_changes(&t, &ht, solver) {
                Ok(changed) => {
                    if let Some((n, a, b)) = changed.first() {
                        r.fail(Property::LeafContexts, g, format!("leaf {n}: {a}  vs  {b}"));
                    }
                }
                Err(e) => r.skipped.push((Property::LeafContexts, e)),
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{BuiltinSolver, CmpOp, Expr};

    fn running() -> GlobalAssertion {
        parse(include_str!("../../corpus/running_strengthened.ga")).unwrap().assertion
    }

    #[test]
    fn propagation_passes_and_tampering_is_caught() {
        let solver = BuiltinSolver::default();
        let g = running();
        let (t, h) = (g.tree(), phi2(&g).assertion_or(&g).tree());
        let fresh: Vec<String> = h.all_names().difference(&t.all_names()).cloned().collect();
        assert_eq!(fresh, vec!["u1".to_string()]);
        assert!(path_condition_mismatch(&t, &h, Some(fresh.clone()), &solver).unwrap().is_none());

        let weaker = h.with_predicate(NodeId(5), Formula::cmp(Expr::var("v4"), CmpOp::Ge, Expr::var("u1")));
        let (n, _, _) = path_condition_mismatch(&t, &weaker, Some(fresh), &solver).unwrap().unwrap();
        assert_eq!(n, NodeId(5));
        assert!(path_condition_mismatch(&t, &weaker, None, &solver).unwrap().is_some());
    }
}
