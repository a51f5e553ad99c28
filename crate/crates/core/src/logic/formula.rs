//! Syntax of linear integer expressions and first-order predicates over
//! interaction variables.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A linear integer expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    /// Product by an integer literal. Variable by variable products are not
    /// representable.
    Mul(i64, Box<Expr>),
}

// Builders named after the operations they construct.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn int(value: i64) -> Self {
        Expr::Int(value)
    }

    pub fn add(self, other: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(other))
    }

    pub fn sub(self, other: Expr) -> Self {
        Expr::Sub(Box::new(self), Box::new(other))
    }

    pub fn scale(self, factor: i64) -> Self {
        Expr::Mul(factor, Box::new(self))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Mul(_, e) => e.collect_vars(out),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Int(_) => false,
            Expr::Var(v) => v == name,
            Expr::Add(a, b) | Expr::Sub(a, b) => a.mentions(name) || b.mentions(name),
            Expr::Mul(_, e) => e.mentions(name),
        }
    }

    /// Evaluates under `env`; unbound variables yield `None`. Arithmetic is
    /// carried out in `i128` so bounded enumeration never overflows.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i128>) -> Option<i128> {
        Some(match self {
            Expr::Int(n) => *n as i128,
            Expr::Var(v) => env(v)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(c, e) => (*c as i128) * e.eval(env)?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Int(n) if *n < 0 => 2,
            Expr::Int(_) | Expr::Var(_) => 3,
        }
    }
}

impl From<i64> for Expr {
    fn from(value: i64) -> Self {
        Expr::Int(value)
    }
}

impl From<&str> for Expr {
    fn from(value: &str) -> Self {
        Expr::Var(value.to_string())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                write!(f, "{a} {op} ")?;
                if b.precedence() <= 1 {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Mul(c, e) => {
                if e.precedence() <= 2 {
                    write!(f, "{c} * ({e})")
                } else {
                    write!(f, "{c} * {e}")
                }
            }
        }
    }
}

/// Comparison operators of the atom language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> Self {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, lhs: i128, rhs: i128) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

/// A predicate of the assertion logic: linear integer arithmetic with
/// quantifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Cmp(Expr, CmpOp, Expr),
    /// `d | e`: `e` is a multiple of the positive modulus `d`. Only produced
    /// by quantifier elimination, but accepted by the parser as well.
    Divides(i64, Expr),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn cmp(lhs: impl Into<Expr>, op: CmpOp, rhs: impl Into<Expr>) -> Self {
        Formula::Cmp(lhs.into(), op, rhs.into())
    }

    pub fn eq(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Self {
        Formula::cmp(lhs, CmpOp::Eq, rhs)
    }

    pub fn lt(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Self {
        Formula::cmp(lhs, CmpOp::Lt, rhs)
    }

    pub fn gt(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Self {
        Formula::cmp(lhs, CmpOp::Gt, rhs)
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    /// Binds `vars` existentially; an empty list returns `self` unchanged.
    pub fn exists(vars: Vec<String>, body: Formula) -> Self {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn forall(vars: Vec<String>, body: Formula) -> Self {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    /// Left-nested conjunction of `parts`, `true` when empty.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => Formula::True,
            Some(first) => iter.fold(first, Formula::and),
        }
    }

    /// Like [`Formula::conjunction`] but drops literal `true` conjuncts.
    pub fn conjunction_skip_true<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        Formula::conjunction(parts.into_iter().filter(|f| *f != Formula::True))
    }

    pub fn disjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        let mut iter = parts.into_iter();
        match iter.next() {
            None => Formula::False,
            Some(first) => iter.fold(first, Formula::or),
        }
    }

    /// Top-level conjuncts, flattening nested `And` nodes left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add_expr = |e: &Expr, bound: &Vec<String>| {
            let mut vs = BTreeSet::new();
            e.collect_vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(a, _, b) => {
                add_expr(a, bound);
                add_expr(b, bound);
            }
            Formula::Divides(_, e) => add_expr(e, bound),
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let depth = bound.len();
                bound.extend(vs.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }

    /// Every variable name occurring in the formula, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Cmp(a, _, b) => {
                a.collect_vars(&mut out);
                b.collect_vars(&mut out);
            }
            Formula::Divides(_, e) => e.collect_vars(&mut out),
            Formula::Exists(vs, _) | Formula::Forall(vs, _) => out.extend(vs.iter().cloned()),
            _ => {}
        });
        out
    }

    fn walk(&self, visit: &mut dyn FnMut(&Formula)) {
        visit(self);
        match self {
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => a.walk(visit),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            _ => {}
        }
    }

    pub fn has_quantifiers(&self) -> bool {
        let mut found = false;
        self.walk(&mut |f| {
            if matches!(f, Formula::Exists(..) | Formula::Forall(..)) {
                found = true;
            }
        });
        found
    }

    /// Evaluates the formula. Free variables are looked up in `env`;
    /// quantified variables range over `domain`, which must be supplied when
    /// the formula has quantifiers. `steps` counts atom evaluations and the
    /// evaluation aborts with `None` once it exceeds `cap`.
    pub fn eval_bounded(
        &self,
        env: &mut Vec<(String, i128)>,
        domain: Option<(i64, i64)>,
        steps: &mut u64,
        cap: u64,
    ) -> Option<bool> {
        fn lookup(env: &[(String, i128)], name: &str) -> Option<i128> {
            env.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
        }
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(a, op, b) => {
                *steps += 1;
                if *steps > cap {
                    return None;
                }
                let look = |n: &str| lookup(env, n);
                op.holds(a.eval(&look)?, b.eval(&look)?)
            }
            Formula::Divides(d, e) => {
                *steps += 1;
                if *steps > cap {
                    return None;
                }
                let look = |n: &str| lookup(env, n);
                e.eval(&look)?.rem_euclid(*d as i128) == 0
            }
            Formula::Not(a) => !a.eval_bounded(env, domain, steps, cap)?,
            Formula::And(a, b) => {
                a.eval_bounded(env, domain, steps, cap)? && b.eval_bounded(env, domain, steps, cap)?
            }
            Formula::Or(a, b) => {
                a.eval_bounded(env, domain, steps, cap)? || b.eval_bounded(env, domain, steps, cap)?
            }
            Formula::Implies(a, b) => {
                !a.eval_bounded(env, domain, steps, cap)? || b.eval_bounded(env, domain, steps, cap)?
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let (lo, hi) = domain?;
                let universal = matches!(self, Formula::Forall(..));
                quantify(vs, body, universal, lo, hi, env, domain, steps, cap)?
            }
        })
    }

    /// Rebuilds the formula bottom-up, letting `f` replace any subformula.
    pub fn map_atoms(&self, f: &mut dyn FnMut(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Not(a) => Formula::Not(Box::new(a.map_atoms(f))),
            Formula::And(a, b) => Formula::And(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f))),
            Formula::Or(a, b) => Formula::Or(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f))),
            Formula::Implies(a, b) => {
                Formula::Implies(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f)))
            }
            Formula::Exists(vs, a) => Formula::Exists(vs.clone(), Box::new(a.map_atoms(f))),
            Formula::Forall(vs, a) => Formula::Forall(vs.clone(), Box::new(a.map_atoms(f))),
            atom => f(atom),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists(..) | Formula::Forall(..) => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(..) => 4,
            _ => 5,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn quantify(
    vars: &[String],
    body: &Formula,
    universal: bool,
    lo: i64,
    hi: i64,
    env: &mut Vec<(String, i128)>,
    domain: Option<(i64, i64)>,
    steps: &mut u64,
    cap: u64,
) -> Option<bool> {
    let Some((first, rest)) = vars.split_first() else {
        return body.eval_bounded(env, domain, steps, cap);
    };
    for value in lo..=hi {
        env.push((first.clone(), value as i128));
        let r = quantify(rest, body, universal, lo, hi, env, domain, steps, cap);
        env.pop();
        let r = r?;
        if universal && !r {
            return Some(false);
        }
        if !universal && r {
            return Some(true);
        }
    }
    Some(universal)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Divides(d, e) => write!(f, "{d} | {e}"),
            Formula::Not(a) => {
                f.write_str("!")?;
                a.fmt_operand(f, 6)
            }
            Formula::And(a, b) => {
                a.fmt_operand(f, 3)?;
                f.write_str(" && ")?;
                b.fmt_operand(f, 4)
            }
            Formula::Or(a, b) => {
                a.fmt_operand(f, 2)?;
                f.write_str(" || ")?;
                b.fmt_operand(f, 3)
            }
            Formula::Implies(a, b) => {
                a.fmt_operand(f, 2)?;
                f.write_str(" => ")?;
                b.fmt_operand(f, 1)
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let q = if matches!(self, Formula::Exists(..)) { "exists" } else { "forall" };
                write!(f, "{q} {}. {body}", vs.join(" "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_of_examples() {
        let a_pos = Formula::gt("a", 0);
        assert_eq!(a_pos.free_vars(), BTreeSet::from(["a".to_string()]));
        assert!(Formula::True.free_vars().is_empty());
        let lifted = Formula::exists(
            vec!["z".into()],
            Formula::gt("x", "z").and(Formula::gt("z", 6)),
        );
        assert_eq!(lifted.free_vars(), BTreeSet::from(["x".to_string()]));
    }

    #[test]
    fn display_parenthesises_right_nested_conjunctions() {
        let f = Formula::True.and(Formula::gt("x", 8).and(Formula::gt(8, 6)));
        assert_eq!(f.to_string(), "true && (x > 8 && 8 > 6)");
        let g = Formula::lt("x", 10).and(Formula::exists(
            vec!["z".into()],
            Formula::gt("x", "z").and(Formula::gt("z", 6)),
        ));
        assert_eq!(g.to_string(), "x < 10 && (exists z. x > z && z > 6)");
    }

    #[test]
    fn expression_display() {
        let e = Expr::var("v3").sub(Expr::int(2));
        assert_eq!(e.to_string(), "v3 - 2");
        let e = Expr::var("a").sub(Expr::var("b").add(Expr::int(1)));
        assert_eq!(e.to_string(), "a - (b + 1)");
        let e = Expr::var("a").add(Expr::int(1)).scale(3);
        assert_eq!(e.to_string(), "3 * (a + 1)");
    }

    #[test]
    fn bounded_evaluation_of_quantifiers() {
        let f = Formula::exists(vec!["z".into()], Formula::gt("x", "z").and(Formula::gt("z", 6)));
        let mut steps = 0;
        let mut env = vec![("x".to_string(), 8)];
        assert_eq!(f.eval_bounded(&mut env, Some((-20, 20)), &mut steps, u64::MAX), Some(true));
        let mut env = vec![("x".to_string(), 7)];
        assert_eq!(f.eval_bounded(&mut env, Some((-20, 20)), &mut steps, u64::MAX), Some(false));
    }
}
