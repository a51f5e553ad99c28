//! Capture-avoiding substitution and binder renaming.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::formula::{Expr, Formula};
use super::LogicError;

/// A finite map from variable names to expressions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    map: BTreeMap<String, Expr>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// The single-variable substitution `[to/from]`.
    pub fn single(from: impl Into<String>, to: impl Into<Expr>) -> Self {
        let mut s = Self::new();
        s.insert(from, to);
        s
    }

    /// Pairs formal parameters with actual expressions, as in `psi[e/v]`.
    /// Extra entries on either side are ignored.
    pub fn zip(params: &[String], args: &[Expr]) -> Self {
        let mut s = Self::new();
        for (p, a) in params.iter().zip(args) {
            s.insert(p.clone(), a.clone());
        }
        s
    }

    pub fn insert(&mut self, from: impl Into<String>, to: impl Into<Expr>) {
        self.map.insert(from.into(), to.into());
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.map.get(name)
    }

    fn without(&self, names: &[String]) -> Substitution {
        let mut map = self.map.clone();
        for n in names {
            map.remove(n);
        }
        Substitution { map }
    }

    fn range_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.map.values() {
            e.collect_vars(&mut out);
        }
        out
    }

    pub fn apply_expr(&self, e: &Expr) -> Expr {
        match e {
            Expr::Int(_) => e.clone(),
            Expr::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| e.clone()),
            Expr::Add(a, b) => Expr::Add(Box::new(self.apply_expr(a)), Box::new(self.apply_expr(b))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(self.apply_expr(a)), Box::new(self.apply_expr(b))),
            Expr::Mul(c, a) => Expr::Mul(*c, Box::new(self.apply_expr(a))),
        }
    }

    /// Applies the substitution to the free occurrences in `f`, renaming
    /// binders that would capture a variable of the range.
    pub fn apply(&self, f: &Formula) -> Formula {
        self.apply_inner(f, true).expect("renaming substitution cannot fail")
    }

    /// Like [`Substitution::apply`] but reports capture instead of renaming.
    pub fn apply_strict(&self, f: &Formula) -> Result<Formula, LogicError> {
        self.apply_inner(f, false)
    }

    fn apply_inner(&self, f: &Formula, rename: bool) -> Result<Formula, LogicError> {
        if self.is_empty() {
            return Ok(f.clone());
        }
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Cmp(a, op, b) => Formula::Cmp(self.apply_expr(a), *op, self.apply_expr(b)),
            Formula::Divides(d, e) => Formula::Divides(*d, self.apply_expr(e)),
            Formula::Not(a) => Formula::Not(Box::new(self.apply_inner(a, rename)?)),
            Formula::And(a, b) => Formula::And(
                Box::new(self.apply_inner(a, rename)?),
                Box::new(self.apply_inner(b, rename)?),
            ),
            Formula::Or(a, b) => Formula::Or(
                Box::new(self.apply_inner(a, rename)?),
                Box::new(self.apply_inner(b, rename)?),
            ),
            Formula::Implies(a, b) => Formula::Implies(
                Box::new(self.apply_inner(a, rename)?),
                Box::new(self.apply_inner(b, rename)?),
            ),
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let inner = self.without(vs);
                let body_free = body.free_vars();
                let relevant = inner
                    .map
                    .iter()
                    .filter(|(k, _)| body_free.contains(*k))
                    .flat_map(|(_, e)| e.vars())
                    .collect::<BTreeSet<_>>();
                let clashing: Vec<&String> = vs.iter().filter(|v| relevant.contains(*v)).collect();
                let (vs, body) = if clashing.is_empty() {
                    (vs.clone(), body.as_ref().clone())
                } else {
                    if !rename {
                        return Err(LogicError::Capture(clashing[0].clone()));
                    }
                    let mut avoid = body.all_vars();
                    avoid.extend(inner.range_vars());
                    avoid.extend(vs.iter().cloned());
                    let mut renaming = Substitution::new();
                    let mut new_vs = Vec::with_capacity(vs.len());
                    for v in vs {
                        if relevant.contains(v) {
                            let fresh = fresh_tick(v, &avoid);
                            avoid.insert(fresh.clone());
                            renaming.insert(v.clone(), Expr::Var(fresh.clone()));
                            new_vs.push(fresh);
                        } else {
                            new_vs.push(v.clone());
                        }
                    }
                    (new_vs, renaming.apply(body))
                };
                let body = Box::new(inner.apply_inner(&body, rename)?);
                if matches!(f, Formula::Exists(..)) {
                    Formula::Exists(vs, body)
                } else {
                    Formula::Forall(vs, body)
                }
            }
        })
    }
}

impl FromIterator<(String, Expr)> for Substitution {
    fn from_iter<T: IntoIterator<Item = (String, Expr)>>(iter: T) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}

/// Appends ticks to `base` until the name is not in `avoid`.
pub fn fresh_tick(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = format!("{base}'");
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

/// Renames bound variables so that every binder is distinct from the other
/// binders and from every name in `reserved` (typically the free variables
/// of the surrounding assertion).
pub fn normalize_binders(f: &Formula, reserved: &mut BTreeSet<String>) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Cmp(..) | Formula::Divides(..) => f.clone(),
        Formula::Not(a) => Formula::Not(Box::new(normalize_binders(a, reserved))),
        Formula::And(a, b) => {
            let a = normalize_binders(a, reserved);
            Formula::And(Box::new(a), Box::new(normalize_binders(b, reserved)))
        }
        Formula::Or(a, b) => {
            let a = normalize_binders(a, reserved);
            Formula::Or(Box::new(a), Box::new(normalize_binders(b, reserved)))
        }
        Formula::Implies(a, b) => {
            let a = normalize_binders(a, reserved);
            Formula::Implies(Box::new(a), Box::new(normalize_binders(b, reserved)))
        }
        Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
            let mut renaming = Substitution::new();
            let mut new_vs = Vec::with_capacity(vs.len());
            for v in vs {
                if reserved.contains(v) {
                    let mut avoid = reserved.clone();
                    avoid.extend(body.all_vars());
                    let fresh = fresh_tick(v, &avoid);
                    renaming.insert(v.clone(), Expr::Var(fresh.clone()));
                    reserved.insert(fresh.clone());
                    new_vs.push(fresh);
                } else {
                    reserved.insert(v.clone());
                    new_vs.push(v.clone());
                }
            }
            let body = renaming.apply(body);
            let body = Box::new(normalize_binders(&body, reserved));
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(new_vs, body)
            } else {
                Formula::Forall(new_vs, body)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_examples() {
        let f = Formula::gt("v3", "v1");
        assert_eq!(Substitution::single("v1", "v2").apply(&f), Formula::gt("v3", "v2"));
        let g = Formula::gt("v4", "v");
        assert_eq!(Substitution::single("v", "u1").apply(&g), Formula::gt("v4", "u1"));
        assert_eq!(Substitution::new().apply(&g), g);
    }

    #[test]
    fn bound_occurrences_are_untouched() {
        let f = Formula::exists(vec!["z".into()], Formula::gt("x", "z"));
        let s = Substitution::single("z", 3);
        assert_eq!(s.apply(&f), f);
    }

    #[test]
    fn capture_is_renamed_or_reported() {
        let f = Formula::exists(vec!["z".into()], Formula::gt("x", "z"));
        let s = Substitution::single("x", "z");
        let renamed = s.apply(&f);
        assert_eq!(
            renamed,
            Formula::exists(vec!["z'".into()], Formula::gt("z", "z'"))
        );
        assert!(matches!(s.apply_strict(&f), Err(LogicError::Capture(v)) if v == "z"));
    }

    #[test]
    fn normalization_separates_binders_from_free_names() {
        let f = Formula::gt("z", 0).and(Formula::exists(vec!["z".into()], Formula::gt("z", 1)));
        let mut reserved = f.free_vars();
        let n = normalize_binders(&f, &mut reserved);
        assert_eq!(
            n,
            Formula::gt("z", 0).and(Formula::exists(vec!["z'".into()], Formula::gt("z'", 1)))
        );
    }
}
