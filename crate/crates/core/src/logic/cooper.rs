//! Decision procedure for linear integer arithmetic by quantifier
//! elimination (Cooper's method).
//!
//! Formulas are translated into a negation normal form over four atom kinds
//! on linear terms `t`: `0 < t`, `t = 0`, `d | t` and `!(d | t)`. Quantifiers
//! are eliminated innermost first. A closed formula reduces to `true` or
//! `false`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use super::formula::{CmpOp, Expr, Formula};
use super::LogicError;

type Var = usize;

/// Upper bound on the size of an intermediate formula.
const MAX_NODES: usize = 400_000;

fn ck(v: Option<i128>) -> Result<i128, LogicError> {
    v.ok_or(LogicError::Overflow)
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: i128, b: i128) -> Result<i128, LogicError> {
    if a == 0 || b == 0 {
        return Ok(a.max(b));
    }
    ck((a / gcd(a, b)).checked_mul(b))
}

/// `sum(c_i * x_i) + konst` with sorted, non-zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Lin {
    coeffs: Vec<(Var, i128)>,
    konst: i128,
}

impl Lin {
    fn constant(k: i128) -> Lin {
        Lin { coeffs: Vec::new(), konst: k }
    }

    fn var(v: Var) -> Lin {
        Lin { coeffs: vec![(v, 1)], konst: 0 }
    }

    fn is_const(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn coeff(&self, v: Var) -> i128 {
        self.coeffs.iter().find(|(x, _)| *x == v).map_or(0, |(_, c)| *c)
    }

    fn mentions(&self, v: Var) -> bool {
        self.coeffs.iter().any(|(x, _)| *x == v)
    }

    fn add(&self, other: &Lin) -> Result<Lin, LogicError> {
        let mut out = Vec::with_capacity(self.coeffs.len() + other.coeffs.len());
        let (mut i, mut j) = (0, 0);
        while i < self.coeffs.len() || j < other.coeffs.len() {
            let a = self.coeffs.get(i);
            let b = other.coeffs.get(j);
            match (a, b) {
                (Some(&(va, ca)), Some(&(vb, cb))) if va == vb => {
                    let c = ck(ca.checked_add(cb))?;
                    if c != 0 {
                        out.push((va, c));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(&(va, ca)), Some(&(vb, _))) if va < vb => {
                    out.push((va, ca));
                    i += 1;
                }
                (Some(_), Some(&(vb, cb))) | (None, Some(&(vb, cb))) => {
                    out.push((vb, cb));
                    j += 1;
                }
                (Some(&(va, ca)), None) => {
                    out.push((va, ca));
                    i += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Ok(Lin { coeffs: out, konst: ck(self.konst.checked_add(other.konst))? })
    }

    fn scale(&self, k: i128) -> Result<Lin, LogicError> {
        if k == 0 {
            return Ok(Lin::constant(0));
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for &(v, c) in &self.coeffs {
            coeffs.push((v, ck(c.checked_mul(k))?));
        }
        Ok(Lin { coeffs, konst: ck(self.konst.checked_mul(k))? })
    }

    fn add_const(&self, k: i128) -> Result<Lin, LogicError> {
        Ok(Lin { coeffs: self.coeffs.clone(), konst: ck(self.konst.checked_add(k))? })
    }

    fn without(&self, v: Var) -> Lin {
        Lin {
            coeffs: self.coeffs.iter().copied().filter(|(x, _)| *x != v).collect(),
            konst: self.konst,
        }
    }

    fn with_coeff(&self, v: Var, c: i128) -> Lin {
        let mut coeffs: Vec<(Var, i128)> =
            self.coeffs.iter().copied().filter(|(x, _)| *x != v).collect();
        if c != 0 {
            let pos = coeffs.partition_point(|(x, _)| *x < v);
            coeffs.insert(pos, (v, c));
        }
        Lin { coeffs, konst: self.konst }
    }

    fn subst(&self, v: Var, s: &Lin) -> Result<Lin, LogicError> {
        let c = self.coeff(v);
        if c == 0 {
            return Ok(self.clone());
        }
        self.without(v).add(&s.scale(c)?)
    }

    fn content(&self) -> i128 {
        self.coeffs.iter().fold(0, |g, (_, c)| gcd(g, *c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Atom {
    /// `0 < t`
    Lt(Lin),
    /// `t = 0`
    Eq(Lin),
    Dvd(i128, Lin),
    NDvd(i128, Lin),
}

impl Atom {
    fn term(&self) -> &Lin {
        match self {
            Atom::Lt(t) | Atom::Eq(t) | Atom::Dvd(_, t) | Atom::NDvd(_, t) => t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Qf {
    True,
    False,
    Atom(Atom),
    And(Vec<Qf>),
    Or(Vec<Qf>),
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn bool_qf(b: bool) -> Qf {
    if b {
        Qf::True
    } else {
        Qf::False
    }
}

fn mk_atom(a: Atom) -> Result<Qf, LogicError> {
    Ok(match a {
        Atom::Lt(t) => {
            if t.is_const() {
                return Ok(bool_qf(t.konst > 0));
            }
            let g = t.content();
            if g > 1 {
                let coeffs = t.coeffs.iter().map(|&(v, c)| (v, c / g)).collect();
                Qf::Atom(Atom::Lt(Lin { coeffs, konst: -floor_div(-t.konst, g) }))
            } else {
                Qf::Atom(Atom::Lt(t))
            }
        }
        Atom::Eq(t) => {
            if t.is_const() {
                return Ok(bool_qf(t.konst == 0));
            }
            let g = t.content();
            if t.konst % g != 0 {
                return Ok(Qf::False);
            }
            let sign = if t.coeffs[0].1 < 0 { -1 } else { 1 };
            let k = g * sign;
            let coeffs = t.coeffs.iter().map(|&(v, c)| (v, c / k)).collect();
            Qf::Atom(Atom::Eq(Lin { coeffs, konst: t.konst / k }))
        }
        Atom::Dvd(d, t) => norm_dvd(d, t, true)?,
        Atom::NDvd(d, t) => norm_dvd(d, t, false)?,
    })
}

fn norm_dvd(d: i128, t: Lin, positive: bool) -> Result<Qf, LogicError> {
    let d = d.abs();
    if d == 1 {
        return Ok(bool_qf(positive));
    }
    let coeffs: Vec<(Var, i128)> = t
        .coeffs
        .iter()
        .map(|&(v, c)| {
            let r = c.rem_euclid(d);
            (v, if r > d / 2 { r - d } else { r })
        })
        .filter(|(_, c)| *c != 0)
        .collect();
    let konst = t.konst.rem_euclid(d);
    if coeffs.is_empty() {
        return Ok(bool_qf((konst == 0) == positive));
    }
    let g = coeffs.iter().fold(gcd(d, konst), |g, (_, c)| gcd(g, *c));
    let (d, coeffs, konst) = if g > 1 {
        (d / g, coeffs.into_iter().map(|(v, c)| (v, c / g)).collect(), konst / g)
    } else {
        (d, coeffs, konst)
    };
    if d == 1 {
        return Ok(bool_qf(positive));
    }
    let t = Lin { coeffs, konst };
    Ok(Qf::Atom(if positive { Atom::Dvd(d, t) } else { Atom::NDvd(d, t) }))
}

fn negate_atom(a: &Atom) -> Result<Qf, LogicError> {
    match a {
        Atom::Lt(t) => mk_atom(Atom::Lt(t.scale(-1)?.add_const(1)?)),
        Atom::Eq(t) => Ok(mk_or(vec![
            mk_atom(Atom::Lt(t.clone()))?,
            mk_atom(Atom::Lt(t.scale(-1)?))?,
        ])),
        Atom::Dvd(d, t) => mk_atom(Atom::NDvd(*d, t.clone())),
        Atom::NDvd(d, t) => mk_atom(Atom::Dvd(*d, t.clone())),
    }
}

fn negate(q: &Qf) -> Result<Qf, LogicError> {
    Ok(match q {
        Qf::True => Qf::False,
        Qf::False => Qf::True,
        Qf::Atom(a) => negate_atom(a)?,
        Qf::And(cs) => mk_or(cs.iter().map(negate).collect::<Result<_, _>>()?),
        Qf::Or(cs) => mk_and(cs.iter().map(negate).collect::<Result<_, _>>()?),
    })
}

fn mk_and(parts: Vec<Qf>) -> Qf {
    let mut flat = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            Qf::True => {}
            Qf::False => return Qf::False,
            Qf::And(cs) => flat.extend(cs),
            other => flat.push(other),
        }
    }
    // Keep only the tightest strict lower bound per linear part.
    let mut bounds: BTreeMap<Vec<(Var, i128)>, i128> = BTreeMap::new();
    let mut eqs: BTreeMap<Vec<(Var, i128)>, i128> = BTreeMap::new();
    let mut rest = Vec::new();
    for p in flat {
        match p {
            Qf::Atom(Atom::Lt(t)) => {
                let e = bounds.entry(t.coeffs).or_insert(t.konst);
                *e = (*e).min(t.konst);
            }
            Qf::Atom(Atom::Eq(t)) => {
                if let Some(k) = eqs.get(&t.coeffs) {
                    if *k != t.konst {
                        return Qf::False;
                    }
                } else {
                    eqs.insert(t.coeffs, t.konst);
                }
            }
            other => rest.push(other),
        }
    }
    for (coeffs, k1) in &bounds {
        let neg: Vec<(Var, i128)> = coeffs.iter().map(|&(v, c)| (v, -c)).collect();
        if let Some(k2) = bounds.get(&neg) {
            if k1.saturating_add(*k2) < 2 {
                return Qf::False;
            }
        }
    }
    let mut out: Vec<Qf> = bounds
        .into_iter()
        .map(|(coeffs, konst)| Qf::Atom(Atom::Lt(Lin { coeffs, konst })))
        .chain(eqs.into_iter().map(|(coeffs, konst)| Qf::Atom(Atom::Eq(Lin { coeffs, konst }))))
        .collect();
    out.extend(rest);
    out.sort();
    out.dedup();
    match out.len() {
        0 => Qf::True,
        1 => out.pop().unwrap(),
        _ => Qf::And(out),
    }
}

fn mk_or(parts: Vec<Qf>) -> Qf {
    let mut flat = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            Qf::False => {}
            Qf::True => return Qf::True,
            Qf::Or(cs) => flat.extend(cs),
            other => flat.push(other),
        }
    }
    let mut bounds: BTreeMap<Vec<(Var, i128)>, i128> = BTreeMap::new();
    let mut rest = Vec::new();
    for p in flat {
        match p {
            Qf::Atom(Atom::Lt(t)) => {
                let e = bounds.entry(t.coeffs).or_insert(t.konst);
                *e = (*e).max(t.konst);
            }
            other => rest.push(other),
        }
    }
    for (coeffs, k1) in &bounds {
        let neg: Vec<(Var, i128)> = coeffs.iter().map(|&(v, c)| (v, -c)).collect();
        if let Some(k2) = bounds.get(&neg) {
            if k1.saturating_add(*k2) >= 1 {
                return Qf::True;
            }
        }
    }
    let mut out: Vec<Qf> = bounds
        .into_iter()
        .map(|(coeffs, konst)| Qf::Atom(Atom::Lt(Lin { coeffs, konst })))
        .collect();
    out.extend(rest);
    out.sort();
    out.dedup();
    match out.len() {
        0 => Qf::False,
        1 => out.pop().unwrap(),
        _ => Qf::Or(out),
    }
}

fn mentions(q: &Qf, v: Var) -> bool {
    match q {
        Qf::True | Qf::False => false,
        Qf::Atom(a) => a.term().mentions(v),
        Qf::And(cs) | Qf::Or(cs) => cs.iter().any(|c| mentions(c, v)),
    }
}

fn size(q: &Qf) -> usize {
    match q {
        Qf::True | Qf::False | Qf::Atom(_) => 1,
        Qf::And(cs) | Qf::Or(cs) => 1 + cs.iter().map(size).sum::<usize>(),
    }
}

fn map_atoms(q: &Qf, f: &mut dyn FnMut(&Atom) -> Result<Qf, LogicError>) -> Result<Qf, LogicError> {
    Ok(match q {
        Qf::True | Qf::False => q.clone(),
        Qf::Atom(a) => f(a)?,
        Qf::And(cs) => mk_and(cs.iter().map(|c| map_atoms(c, f)).collect::<Result<_, _>>()?),
        Qf::Or(cs) => mk_or(cs.iter().map(|c| map_atoms(c, f)).collect::<Result<_, _>>()?),
    })
}

fn subst_atom(a: &Atom, v: Var, s: &Lin) -> Result<Qf, LogicError> {
    if !a.term().mentions(v) {
        return Ok(Qf::Atom(a.clone()));
    }
    mk_atom(match a {
        Atom::Lt(t) => Atom::Lt(t.subst(v, s)?),
        Atom::Eq(t) => Atom::Eq(t.subst(v, s)?),
        Atom::Dvd(d, t) => Atom::Dvd(*d, t.subst(v, s)?),
        Atom::NDvd(d, t) => Atom::NDvd(*d, t.subst(v, s)?),
    })
}

fn subst(q: &Qf, v: Var, s: &Lin) -> Result<Qf, LogicError> {
    map_atoms(q, &mut |a| subst_atom(a, v, s))
}

fn collect_atoms<'a>(q: &'a Qf, out: &mut Vec<&'a Atom>) {
    match q {
        Qf::True | Qf::False => {}
        Qf::Atom(a) => out.push(a),
        Qf::And(cs) | Qf::Or(cs) => cs.iter().for_each(|c| collect_atoms(c, out)),
    }
}

struct Engine {
    deadline: Option<Instant>,
    free: HashMap<String, Var>,
    next: Var,
}

impl Engine {
    fn new(deadline: Option<Instant>) -> Self {
        Engine { deadline, free: HashMap::new(), next: 0 }
    }

    fn tick(&self) -> Result<(), LogicError> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(LogicError::Timeout),
            _ => Ok(()),
        }
    }

    fn fresh(&mut self) -> Var {
        self.next += 1;
        self.next - 1
    }

    fn lookup(&mut self, scope: &[(String, Var)], name: &str) -> Var {
        if let Some((_, v)) = scope.iter().rev().find(|(n, _)| n == name) {
            return *v;
        }
        if let Some(v) = self.free.get(name) {
            return *v;
        }
        let v = self.fresh();
        self.free.insert(name.to_string(), v);
        v
    }

    fn lin(&mut self, e: &Expr, scope: &[(String, Var)]) -> Result<Lin, LogicError> {
        Ok(match e {
            Expr::Int(n) => Lin::constant(*n as i128),
            Expr::Var(name) => Lin::var(self.lookup(scope, name)),
            Expr::Add(a, b) => self.lin(a, scope)?.add(&self.lin(b, scope)?)?,
            Expr::Sub(a, b) => self.lin(a, scope)?.add(&self.lin(b, scope)?.scale(-1)?)?,
            Expr::Mul(c, a) => self.lin(a, scope)?.scale(*c as i128)?,
        })
    }

    /// Quantifier-free NNF of `f` (negated when `neg`).
    fn reduce(&mut self, f: &Formula, neg: bool, scope: &mut Vec<(String, Var)>) -> Result<Qf, LogicError> {
        self.tick()?;
        Ok(match f {
            Formula::True => bool_qf(!neg),
            Formula::False => bool_qf(neg),
            Formula::Cmp(a, op, b) => {
                let op = if neg { op.negate() } else { *op };
                let a = self.lin(a, scope)?;
                let b = self.lin(b, scope)?;
                let b_minus_a = b.add(&a.scale(-1)?)?;
                let a_minus_b = b_minus_a.scale(-1)?;
                match op {
                    CmpOp::Lt => mk_atom(Atom::Lt(b_minus_a))?,
                    CmpOp::Le => mk_atom(Atom::Lt(b_minus_a.add_const(1)?))?,
                    CmpOp::Gt => mk_atom(Atom::Lt(a_minus_b))?,
                    CmpOp::Ge => mk_atom(Atom::Lt(a_minus_b.add_const(1)?))?,
                    CmpOp::Eq => mk_atom(Atom::Eq(a_minus_b))?,
                    CmpOp::Ne => mk_or(vec![mk_atom(Atom::Lt(a_minus_b))?, mk_atom(Atom::Lt(b_minus_a))?]),
                }
            }
            Formula::Divides(d, e) => {
                let t = self.lin(e, scope)?;
                if *d == 0 {
                    let eq = mk_atom(Atom::Eq(t))?;
                    if neg {
                        negate(&eq)?
                    } else {
                        eq
                    }
                } else if neg {
                    mk_atom(Atom::NDvd(*d as i128, t))?
                } else {
                    mk_atom(Atom::Dvd(*d as i128, t))?
                }
            }
            Formula::Not(a) => self.reduce(a, !neg, scope)?,
            Formula::And(a, b) => {
                let a = self.reduce(a, neg, scope)?;
                let b = self.reduce(b, neg, scope)?;
                if neg {
                    mk_or(vec![a, b])
                } else {
                    mk_and(vec![a, b])
                }
            }
            Formula::Or(a, b) => {
                let a = self.reduce(a, neg, scope)?;
                let b = self.reduce(b, neg, scope)?;
                if neg {
                    mk_and(vec![a, b])
                } else {
                    mk_or(vec![a, b])
                }
            }
            Formula::Implies(a, b) => {
                let a = self.reduce(a, !neg, scope)?;
                let b = self.reduce(b, neg, scope)?;
                if neg {
                    mk_and(vec![a, b])
                } else {
                    mk_or(vec![a, b])
                }
            }
            Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
                let universal = matches!(f, Formula::Forall(..));
                let depth = scope.len();
                let mut bound = Vec::with_capacity(vs.len());
                for v in vs {
                    let idx = self.fresh();
                    scope.push((v.clone(), idx));
                    bound.push(idx);
                }
                // forall x. B is !(exists x. !B)
                let inner_neg = universal;
                let body = self.reduce(body, inner_neg, scope);
                scope.truncate(depth);
                let eliminated = self.exists_all(&bound, body?)?;
                if universal != neg {
                    negate(&eliminated)?
                } else {
                    eliminated
                }
            }
        })
    }

    fn exists_all(&mut self, vars: &[Var], mut q: Qf) -> Result<Qf, LogicError> {
        let mut remaining: Vec<Var> = vars.iter().copied().filter(|v| mentions(&q, *v)).collect();
        while !remaining.is_empty() {
            let (pos, _) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, v)| cost(&q, **v))
                .expect("non-empty");
            let v = remaining.swap_remove(pos);
            q = self.exists_one(v, q)?;
            remaining.retain(|v| mentions(&q, *v));
        }
        Ok(q)
    }

    fn exists_one(&mut self, x: Var, q: Qf) -> Result<Qf, LogicError> {
        self.tick()?;
        if !mentions(&q, x) {
            return Ok(q);
        }
        let conj = match q {
            Qf::Or(ds) => {
                let mut out = Vec::with_capacity(ds.len());
                for d in ds {
                    out.push(self.exists_one(x, d)?);
                }
                return Ok(mk_or(out));
            }
            Qf::And(cs) => cs,
            other => vec![other],
        };
        let (with, mut without): (Vec<Qf>, Vec<Qf>) = conj.into_iter().partition(|c| mentions(c, x));
        let unit_eq = with.iter().position(|c| {
            matches!(c, Qf::Atom(Atom::Eq(t)) if t.coeff(x).abs() == 1)
        });
        if let Some(i) = unit_eq {
            let Qf::Atom(Atom::Eq(t)) = &with[i] else { unreachable!() };
            let c = t.coeff(x);
            let s = t.without(x).scale(-c)?;
            for (j, other) in with.iter().enumerate() {
                if j != i {
                    without.push(subst(other, x, &s)?);
                }
            }
            return Ok(mk_and(without));
        }
        let body = mk_and(with);
        let r = self.cooper(x, &body)?;
        without.push(r);
        Ok(mk_and(without))
    }

    fn cooper(&mut self, x: Var, f: &Qf) -> Result<Qf, LogicError> {
        let mut atoms = Vec::new();
        collect_atoms(f, &mut atoms);
        let mut l: i128 = 1;
        for a in &atoms {
            let c = a.term().coeff(x);
            if c != 0 {
                l = lcm(l, c.abs())?;
            }
        }
        // Scale every atom so that x appears with coefficient +-1 in terms of x' = l * x.
        let scaled = map_atoms(f, &mut |a| {
            let c = a.term().coeff(x);
            if c == 0 {
                return Ok(Qf::Atom(a.clone()));
            }
            let m = l / c.abs();
            let sign = c.signum();
            Ok(match a {
                Atom::Lt(t) => Qf::Atom(Atom::Lt(t.scale(m)?.with_coeff(x, sign))),
                Atom::Eq(t) => Qf::Atom(Atom::Eq(t.scale(m)?.with_coeff(x, sign))),
                Atom::Dvd(d, t) => Qf::Atom(Atom::Dvd(ck(d.checked_mul(m))?, t.scale(m)?.with_coeff(x, sign))),
                Atom::NDvd(d, t) => Qf::Atom(Atom::NDvd(ck(d.checked_mul(m))?, t.scale(m)?.with_coeff(x, sign))),
            })
        })?;
        let scaled = if l > 1 {
            mk_and(vec![scaled, Qf::Atom(Atom::Dvd(l, Lin::var(x)))])
        } else {
            scaled
        };

        let mut atoms = Vec::new();
        collect_atoms(&scaled, &mut atoms);
        let mut lower: BTreeSet<Lin> = BTreeSet::new();
        let mut upper: BTreeSet<Lin> = BTreeSet::new();
        let mut delta: i128 = 1;
        for a in &atoms {
            let c = a.term().coeff(x);
            if c == 0 {
                continue;
            }
            let r = a.term().without(x);
            match a {
                // c x + r > 0
                Atom::Lt(_) => {
                    if c > 0 {
                        lower.insert(r.scale(-1)?);
                    } else {
                        upper.insert(r);
                    }
                }
                Atom::Eq(_) => {
                    let point = r.scale(-c)?;
                    lower.insert(point.add_const(-1)?);
                    upper.insert(point.add_const(1)?);
                }
                Atom::Dvd(d, _) | Atom::NDvd(d, _) => delta = lcm(delta, *d)?,
            }
        }
        let use_lower = lower.len() <= upper.len();
        let infinite = map_atoms(&scaled, &mut |a| {
            let c = a.term().coeff(x);
            Ok(match a {
                Atom::Lt(_) if c != 0 => bool_qf((c > 0) != use_lower),
                Atom::Eq(_) if c != 0 => Qf::False,
                _ => Qf::Atom(a.clone()),
            })
        })?;
        let mut disjuncts = Vec::new();
        let sign: i128 = if use_lower { 1 } else { -1 };
        for j in 1..=delta {
            self.tick()?;
            disjuncts.push(subst(&infinite, x, &Lin::constant(sign * j))?);
            if disjuncts.last() == Some(&Qf::True) {
                return Ok(Qf::True);
            }
        }
        let bounds = if use_lower { &lower } else { &upper };
        let mut total = disjuncts.iter().map(size).sum::<usize>();
        for b in bounds {
            for j in 1..=delta {
                self.tick()?;
                let point = b.add_const(sign * j)?;
                let d = subst(&scaled, x, &point)?;
                if d == Qf::True {
                    return Ok(Qf::True);
                }
                total += size(&d);
                if total > MAX_NODES {
                    return Err(LogicError::TooLarge);
                }
                disjuncts.push(d);
            }
        }
        Ok(mk_or(disjuncts))
    }
}

fn cost(q: &Qf, v: Var) -> usize {
    let mut atoms = Vec::new();
    collect_atoms(q, &mut atoms);
    let mut n = 0;
    for a in atoms {
        let c = a.term().coeff(v);
        if c != 0 {
            if matches!(a, Atom::Eq(_)) && c.abs() == 1 {
                return 0;
            }
            n += 1 + usize::from(c.abs() != 1);
        }
    }
    n
}

fn decide(f: &Formula, neg: bool, deadline: Option<Instant>) -> Result<bool, LogicError> {
    let mut engine = Engine::new(deadline);
    let q = engine.reduce(f, neg, &mut Vec::new())?;
    let mut free: Vec<Var> = engine.free.values().copied().collect();
    free.sort_unstable();
    let q = engine.exists_all(&free, q)?;
    match q {
        Qf::True => Ok(true),
        Qf::False => Ok(false),
        other => unreachable!("closed formula did not reduce: {other:?}"),
    }
}

/// Whether `f` holds for every integer assignment of its free variables.
pub fn is_valid(f: &Formula, deadline: Option<Instant>) -> Result<bool, LogicError> {
    decide(f, true, deadline).map(|sat| !sat)
}

/// Whether some integer assignment of the free variables satisfies `f`.
pub fn is_satisfiable(f: &Formula, deadline: Option<Instant>) -> Result<bool, LogicError> {
    decide(f, false, deadline)
}

/// A quantifier-free formula equivalent to `f` over the integers.
pub fn eliminate(f: &Formula, deadline: Option<Instant>) -> Result<Formula, LogicError> {
    let mut engine = Engine::new(deadline);
    let q = engine.reduce(f, false, &mut Vec::new())?;
    let names: HashMap<Var, String> = engine.free.iter().map(|(n, v)| (*v, n.clone())).collect();
    to_formula(&q, &names)
}

fn small(k: i128) -> Result<i64, LogicError> {
    i64::try_from(k).map_err(|_| LogicError::Overflow)
}

fn to_expr(t: &Lin, names: &HashMap<Var, String>) -> Result<Expr, LogicError> {
    let mut out: Option<Expr> = None;
    for &(v, c) in &t.coeffs {
        let x = Expr::var(names[&v].clone());
        let term = if c == 1 { x } else { x.scale(small(c)?) };
        out = Some(match out {
            Some(e) => e.add(term),
            None => term,
        });
    }
    Ok(match out {
        None => Expr::int(small(t.konst)?),
        Some(e) if t.konst == 0 => e,
        Some(e) => e.add(Expr::int(small(t.konst)?)),
    })
}

fn to_formula(q: &Qf, names: &HashMap<Var, String>) -> Result<Formula, LogicError> {
    Ok(match q {
        Qf::True => Formula::True,
        Qf::False => Formula::False,
        Qf::Atom(Atom::Lt(t)) => Formula::gt(to_expr(t, names)?, 0),
        Qf::Atom(Atom::Eq(t)) => Formula::eq(to_expr(t, names)?, 0),
        Qf::Atom(Atom::Dvd(d, t)) => Formula::Divides(small(*d)?, to_expr(t, names)?),
        Qf::Atom(Atom::NDvd(d, t)) => Formula::Divides(small(*d)?, to_expr(t, names)?).not(),
        Qf::And(cs) => {
            let parts: Result<Vec<Formula>, LogicError> = cs.iter().map(|c| to_formula(c, names)).collect();
            Formula::conjunction(parts?)
        }
        Qf::Or(cs) => {
            let parts: Result<Vec<Formula>, LogicError> = cs.iter().map(|c| to_formula(c, names)).collect();
            Formula::disjunction(parts?)
        }
    })
}
