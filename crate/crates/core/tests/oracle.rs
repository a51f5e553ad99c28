use choreo_core::gen::{confined_formula, CONFINED_FREE};
use choreo_core::logic::brute::brute_force_valid;
use choreo_core::logic::cooper::eliminate;
use choreo_core::logic::{BuiltinSolver, Formula, Solver};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x0a7c1e;
const CASES: usize = 200;
const BOUND: i64 = 4;
const CAP: u64 = 50_000_000;

fn formulas() -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..CASES).map(|_| confined_formula(&mut rng, BOUND)).collect()
}

#[test]
fn decision_procedure_agrees_with_enumeration() {
    let s = BuiltinSolver::default();
    let mut valid = 0;
    for f in formulas() {
        let expected = brute_force_valid(&f, -BOUND, BOUND, CAP).unwrap();
        assert_eq!(s.is_valid(&f).unwrap(), expected, "{f}");
        valid += usize::from(expected);
    }
    assert!(valid > 0 && valid < CASES, "{valid} of {CASES} valid");
}

#[test]
fn generated_formulas_are_varied() {
    let all = formulas();
    let quantified = all.iter().filter(|f| f.has_quantifiers()).count();
    assert!(quantified >= CASES / 4, "{quantified} of {CASES} quantified");
    assert!(all.iter().any(|f| matches!(f, Formula::Implies(..))));
}

/// Every assignment of `vars` to values in `[-bound, bound]`.
fn assignments(vars: &[String], bound: i64) -> Vec<Vec<(String, i128)>> {
    vars.iter().fold(vec![Vec::new()], |acc, v| {
        acc.into_iter()
            .flat_map(|env| {
                (-bound..=bound).map(move |k| {
                    let mut env = env.clone();
                    env.push((v.clone(), k as i128));
                    env
                })
            })
            .collect()
    })
}

#[test]
fn elimination_preserves_meaning_in_the_box() {
    let vars: Vec<String> = CONFINED_FREE.iter().map(|v| v.to_string()).collect();
    for f in formulas() {
        let q = eliminate(&f, None).unwrap();
        assert!(!q.has_quantifiers(), "{q}");
        for mut env in assignments(&vars, BOUND) {
            let mut steps = 0;
            let want = f.eval_bounded(&mut env, Some((-BOUND, BOUND)), &mut steps, CAP).unwrap();
            let got = q.eval_bounded(&mut env, None, &mut steps, CAP).unwrap();
            assert_eq!(got, want, "{f}  ~>  {q}  at {env:?}");
        }
    }
}
