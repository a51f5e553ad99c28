//! Random well-formed assertions and confined formulas for property tests,
//! and the properties checked on them.

pub mod props;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ast::{check_well_formed, Branch, GlobalAssertion, Interaction, Participant};
use crate::logic::{CmpOp, Expr, Formula};

const PARTICIPANTS: [&str; 5] = ["Alice", "Bob", "Carol", "Dave", "Eve"];
const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

/// Size limits for generated assertions.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Maximal nesting of constructors.
    pub depth: usize,
    pub participants: usize,
    /// Interaction variables and recursion parameters together.
    pub vars: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { depth: 6, participants: 5, vars: 8 }
    }
}

struct Builder<'r, R: Rng> {
    rng: &'r mut R,
    limits: Limits,
    roles: Vec<Participant>,
    next_var: usize,
    has_rec: bool,
}

#[derive(Clone)]
struct Rec {
    name: String,
    arity: usize,
    guarded: bool,
}

impl<R: Rng> Builder<'_, R> {
    fn fresh(&mut self) -> Option<String> {
        if self.next_var >= self.limits.vars {
            return None;
        }
        self.next_var += 1;
        Some(format!("v{}", self.next_var))
    }

    fn pair(&mut self) -> (Participant, Participant) {
        let mut two: Vec<Participant> = self.roles.choose_multiple(self.rng, 2).cloned().collect();
        let r = two.pop().expect("at least two participants");
        (two.pop().expect("at least two participants"), r)
    }

    fn operand(&mut self, scope: &[String]) -> Expr {
        match self.rng.gen_range(0..4) {
            0 if !scope.is_empty() => {
                let v = Expr::var(scope.choose(self.rng).expect("non-empty").clone());
                match self.rng.gen_range(-3..=3) {
                    k if k < 0 => v.sub(Expr::int(-k)),
                    0 => v,
                    k => v.add(Expr::int(k)),
                }
            }
            1 | 2 if !scope.is_empty() => Expr::var(scope.choose(self.rng).expect("non-empty").clone()),
            _ => Expr::int(self.rng.gen_range(-2..=10)),
        }
    }

    /// An atom whose left-hand side is drawn from `focus` when possible.
    fn atom(&mut self, focus: &[String], scope: &[String]) -> Formula {
        let pool = if focus.is_empty() { scope } else { focus };
        let Some(lhs) = pool.choose(self.rng).cloned() else {
            return Formula::True;
        };
        let op = *OPS.choose(self.rng).expect("non-empty");
        let rhs = self.operand(scope);
        Formula::cmp(Expr::var(lhs), op, rhs)
    }

    fn predicate(&mut self, focus: &[String], scope: &[String]) -> Formula {
        if self.rng.gen_bool(0.2) {
            return Formula::True;
        }
        let first = self.atom(focus, scope);
        match self.rng.gen_range(0..10) {
            0..=4 => first,
            5..=8 => first.and(self.atom(focus, scope)),
            _ => first.or(self.atom(focus, scope)),
        }
    }

    fn terminal(&mut self, scope: &[String], rec: &Option<Rec>) -> GlobalAssertion {
        match rec {
            Some(r) if r.guarded && self.rng.gen_bool(0.6) => {
                let args = (0..r.arity).map(|_| self.operand(scope)).collect();
                GlobalAssertion::RecCall { name: r.name.clone(), args }
            }
            _ => GlobalAssertion::End,
        }
    }

    fn assertion(&mut self, depth: usize, scope: &[String], rec: &Option<Rec>) -> GlobalAssertion {
        if depth >= self.limits.depth {
            return self.terminal(scope, rec);
        }
        match self.rng.gen_range(0..20) {
            0..=10 => self.prefix(depth, scope, rec),
            11..=13 => self.branching(depth, scope, rec),
            14..=15 if !self.has_rec => self.rec_def(depth, scope),
            _ => self.terminal(scope, rec),
        }
    }

    fn prefix(&mut self, depth: usize, scope: &[String], rec: &Option<Rec>) -> GlobalAssertion {
        let (sender, receiver) = self.pair();
        let count = self.rng.gen_range(0..=2);
        let vars: Vec<String> = (0..count).filter_map(|_| self.fresh()).collect();
        let mut inner = scope.to_vec();
        inner.extend(vars.iter().cloned());
        let pred = self.predicate(&vars, &inner);
        let rec = rec.clone().map(|r| Rec { guarded: true, ..r });
        let cont = self.assertion(depth + 1, &inner, &rec);
        GlobalAssertion::prefix(Interaction { sender, receiver, vars, pred }, cont)
    }

    fn branching(&mut self, depth: usize, scope: &[String], rec: &Option<Rec>) -> GlobalAssertion {
        let (selector, receiver) = self.pair();
        let arms = self.rng.gen_range(1..=3);
        let branches = (1..=arms)
            .map(|i| Branch {
                guard: self.predicate(&[], scope),
                label: format!("l{i}"),
                cont: self.assertion(depth + 1, scope, rec),
            })
            .collect();
        GlobalAssertion::Branching { selector, receiver, branches }
    }

    fn rec_def(&mut self, depth: usize, scope: &[String]) -> GlobalAssertion {
        self.has_rec = true;
        let arity = self.rng.gen_range(0..=1);
        let params: Vec<String> = (0..arity).filter_map(|_| self.fresh()).collect();
        let init: Vec<Expr> = params.iter().map(|_| self.operand(scope)).collect();
        let invariant = self.predicate(&params, &params);
        let mut inner = scope.to_vec();
        inner.extend(params.iter().cloned());
        let rec = Some(Rec { name: "t".into(), arity: params.len(), guarded: false });
        let body = self.assertion(depth + 1, &inner, &rec);
        GlobalAssertion::RecDef { name: "t".into(), init, params, invariant, body: Box::new(body) }
    }
}

/// A random well-formed assertion within `limits`.
pub fn assertion<R: Rng>(rng: &mut R, limits: Limits) -> GlobalAssertion {
    loop {
        let k = rng.gen_range(2..=limits.participants.max(2));
        let roles = PARTICIPANTS[..k.min(PARTICIPANTS.len())].iter().map(|p| Participant::new(*p)).collect();
        let mut b = Builder { rng: &mut *rng, limits, roles, next_var: 0, has_rec: false };
        let g = b.assertion(0, &[], &None);
        if check_well_formed(&g).is_empty() {
            return g;
        }
    }
}

/// Free variables of [`confined_formula`] results.
pub const CONFINED_FREE: [&str; 3] = ["a", "b", "c"];

/// A formula in which every variable, free or bound, is restricted to
/// `[-bound, bound]`. Its truth over the integers is decided by enumerating
/// that interval.
pub fn confined_formula<R: Rng>(rng: &mut R, bound: i64) -> Formula {
    let free = rng.gen_range(1..=CONFINED_FREE.len());
    let scope: Vec<String> = CONFINED_FREE[..free].iter().map(|v| v.to_string()).collect();
    let body = confined_body(rng, 2, &scope, bound);
    let box_of = |v: &str| Formula::cmp(Expr::int(-bound), CmpOp::Le, Expr::var(v)).and(Formula::cmp(Expr::var(v), CmpOp::Le, Expr::int(bound)));
    let used = body.free_vars();
    let hyp = Formula::conjunction(scope.iter().filter(|v| used.contains(*v)).map(|v| box_of(v)));
    if hyp == Formula::True {
        body
    } else {
        hyp.implies(body)
    }
}

fn linear<R: Rng>(rng: &mut R, scope: &[String]) -> Expr {
    let terms = rng.gen_range(1..=2);
    let mut e = Expr::int(rng.gen_range(-6..=6));
    for _ in 0..terms {
        let v = Expr::var(scope.choose(rng).expect("non-empty").clone());
        let c = *[-3, -2, -1, 1, 1, 2, 3].choose(rng).expect("non-empty");
        e = Expr::add(if c == 1 { v } else { v.scale(c) }, e);
    }
    e
}

fn confined_atom<R: Rng>(rng: &mut R, scope: &[String]) -> Formula {
    if rng.gen_bool(0.1) {
        return Formula::Divides(rng.gen_range(2..=4), linear(rng, scope));
    }
    let op = *OPS.choose(rng).expect("non-empty");
    Formula::cmp(linear(rng, scope), op, Expr::int(rng.gen_range(-6..=6)))
}

fn confined_body<R: Rng>(rng: &mut R, quantifiers: usize, scope: &[String], bound: i64) -> Formula {
    if quantifiers > 0 && rng.gen_bool(0.5) {
        let v = ["x", "y"][2 - quantifiers].to_string();
        let mut inner = scope.to_vec();
        inner.push(v.clone());
        let body = confined_body(rng, quantifiers - 1, &inner, bound);
        let range = Formula::cmp(Expr::int(-bound), CmpOp::Le, Expr::var(v.clone()))
            .and(Formula::cmp(Expr::var(v.clone()), CmpOp::Le, Expr::int(bound)));
        let q = if rng.gen_bool(0.5) {
            Formula::exists(vec![v], range.and(body))
        } else {
            Formula::forall(vec![v], range.implies(body))
        };
        return match rng.gen_range(0..3) {
            0 => q.and(confined_atom(rng, scope)),
            1 => q.or(confined_atom(rng, scope)),
            _ => q,
        };
    }
    let mut f = confined_atom(rng, scope);
    for _ in 0..rng.gen_range(0..=2) {
        let g = confined_atom(rng, scope);
        f = match rng.gen_range(0..4) {
            0 => f.or(g),
            1 => f.implies(g),
            2 => f.and(g.not()),
            _ => f.and(g),
        };
    }
    f
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn assertions_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let g = assertion(&mut rng, Limits::default());
            let t = g.tree();
            assert!(t.participants().len() <= 5);
            assert!(t.all_names().iter().filter(|n| n.starts_with('v')).count() <= 8);
        }
    }

    #[test]
    fn confined_formulas_only_use_known_names() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = confined_formula(&mut rng, 4);
            assert!(f.free_vars().iter().all(|v| CONFINED_FREE.contains(&v.as_str())), "{f}");
        }
    }
}
