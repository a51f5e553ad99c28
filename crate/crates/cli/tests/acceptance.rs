//! Acceptance run: one PASS or FAIL line per criterion.
//!
//! The process fails when a criterion fails, except for those listed in
//! `UNATTAINABLE`, which are still run and reported.

// Tolerances are pinned as constants even where they are zero.
#![allow(clippy::absurd_extreme_comparisons)]

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use choreo_core::ast::{GlobalAssertion, Label, NodeId};
use choreo_core::gen::props::{check, Property, Report};
use choreo_core::gen::{assertion, confined_formula, Limits, CONFINED_FREE};
use choreo_core::hs::{hs_violations, phi1, phi2};
use choreo_core::logic::brute::brute_force_valid;
use choreo_core::logic::cooper::eliminate;
use choreo_core::logic::{BuiltinSolver, Expr, Formula, Solver, Substitution};
use choreo_core::parser::{parse, parse_formula, print};
use choreo_core::repair::RepairOutcome;
use choreo_core::session::{AmendSession, RepairTag, ViolationKind};
use choreo_core::ts::{branch_repair_options, gsat, phi3, rewrite, split, ts_violations, BranchStrategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Range for the enumeration cross-check of the strengthening side condition.
const SIDE_CONDITION_RANGE: (i64, i64) = (-8, 8);
const PROPERTY_CASES: usize = 600;
const PROPERTY_SEED: u64 = 0x5eed;
const MAX_COUNTEREXAMPLES: usize = 0;
const ORACLE_CASES: usize = 200;
const ORACLE_SEED: u64 = 0x0a7c1e;
const ORACLE_BOUND: i64 = 4;
const MAX_DISAGREEMENTS: usize = 0;
const ENUMERATION_CAP: u64 = 50_000_000;

/// Criteria that cannot hold; see the ledger entry on leaf contexts.
const UNATTAINABLE: &[&str] = &["property-leaf-contexts"];

type Verdict = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Verdict>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_path(name: &str) -> String {
    format!("{}/../core/corpus/{name}.ga", env!("CARGO_MANIFEST_DIR"))
}

fn corpus(name: &str) -> GlobalAssertion {
    let src = std::fs::read_to_string(corpus_path(name)).expect("corpus file");
    parse(&src).expect("corpus parses").assertion
}

fn f(src: &str) -> Formula {
    parse_formula(src).expect("formula parses")
}

fn solver() -> BuiltinSolver {
    BuiltinSolver::default()
}

fn hs_violations_of_running() -> Verdict {
    let found: BTreeSet<(usize, Vec<String>)> = hs_violations(&corpus("running"))
        .into_iter()
        .map(|v| (v.node.0, v.unknown_vars.into_iter().collect()))
        .collect();
    let want = BTreeSet::from([(4, vec!["v1".to_string()]), (5, vec!["v".to_string()])]);
    ensure(found == want, || format!("got {found:?}"))?;
    Ok("n4 {v1}, n5 {v}".into())
}

fn strengthening() -> Verdict {
    let s = solver();
    let g = corpus("running");
    let out = phi1(&g, &s);
    let RepairOutcome::Failed { assertion, node, .. } = &out else {
        return Err(format!("expected a failure, got {out:?}"));
    };
    ensure(*node == NodeId(5), || format!("failed at {node}"))?;
    let t = g.tree();
    let fixed = assertion.tree().predicate(NodeId(4)).to_string();
    ensure(fixed == "v3 > v2", || format!("n4 became {fixed}"))?;

    let psi = t.predicate(NodeId(4));
    let replaced = Substitution::single("v1", Expr::var("v2")).apply(&psi);
    let side = t.context(NodeId(4)).and(replaced).implies(psi);
    let by_solver = s.is_valid(&side).map_err(|e| e.to_string())?;
    let (lo, hi) = SIDE_CONDITION_RANGE;
    let by_enumeration = brute_force_valid(&side, lo, hi, ENUMERATION_CAP).map_err(|e| e.to_string())?;
    ensure(by_solver && by_enumeration, || format!("solver {by_solver}, enumeration {by_enumeration}: {side}"))?;
    Ok(format!("side condition valid by solver and enumeration over {lo}..{hi}"))
}

fn propagation() -> Verdict {
    let g = corpus("running_strengthened");
    let out = phi2(&g);
    let RepairOutcome::Fixed { assertion, .. } = &out else {
        return Err(format!("expected a fix, got {out:?}"));
    };
    let t = assertion.tree();
    let n3 = t.label(NodeId(3)).to_string();
    ensure(n3 == "Bob -> Carol : (v2 u1 | v2 > v1 && u1 = v)", || format!("n3: {n3}"))?;
    let n5 = t.predicate(NodeId(5)).to_string();
    ensure(n5 == "v4 > u1", || format!("n5: {n5}"))?;
    ensure(hs_violations(assertion).is_empty(), || "HS violations remain".into())?;
    Ok("HS clean after propagation".into())
}

fn relay_propagation() -> Verdict {
    let out = phi2(&corpus("relay"));
    let RepairOutcome::Fixed { assertion, changes } = &out else {
        return Err(format!("expected a fix, got {out:?}"));
    };
    let t = assertion.tree();
    let touched: Vec<NodeId> = changes.iter().map(|c| c.node).collect();
    ensure(touched == [NodeId(2), NodeId(4), NodeId(5)], || format!("touched {touched:?}"))?;
    let preds: Vec<String> = touched.iter().map(|n| t.predicate(*n).to_string()).collect();
    let want = ["u1 > 0 && u5 = v", "u3 > 0 && u6 = u5", "u4 > u6"];
    ensure(preds == want, || format!("got {preds:?}"))?;
    Ok(preds.join("; "))
}

fn conflict_lifting() -> Verdict {
    let s = solver();
    let g = corpus("conflict");
    let t = g.tree();
    let nodes: Vec<NodeId> = ts_violations(&g, &s).map_err(|e| e.to_string())?.iter().map(|v| v.node).collect();
    ensure(nodes == [NodeId(3)], || format!("violations at {nodes:?}"))?;
    let (phi, psi) = rewrite(&t.predicate(NodeId(3)), &["z".to_string()]);
    ensure((phi.clone(), psi.clone()) == (f("z > 6"), f("x > z && y != z")), || format!("rewrite gave {phi} / {psi}"))?;
    let parts = split(&t, NodeId(3), &phi, &psi, &s).map_err(|e| e.to_string())?;
    ensure(parts.first() == Some(&f("x > z")), || format!("split gave {parts:?}"))?;
    let out = phi3(&g, &s);
    let RepairOutcome::Fixed { assertion, .. } = &out else {
        return Err(format!("expected a fix, got {out:?}"));
    };
    let n1 = assertion.tree().predicate(NodeId(1)).to_string();
    ensure(n1 == "x < 10 && (exists z. x > z && z > 6)", || format!("n1: {n1}"))?;
    ensure(gsat(assertion, &Formula::True, &s).map_err(|e| e.to_string())?, || "gsat fails".into())?;
    Ok(format!("n1: {n1}"))
}

fn invariant_lifting() -> Verdict {
    let s = solver();
    let out = phi3(&corpus("invariant"), &s);
    let RepairOutcome::Fixed { assertion, .. } = &out else {
        return Err(format!("expected a fix, got {out:?}"));
    };
    let n1 = assertion.tree().predicate(NodeId(1)).to_string();
    ensure(n1 == "true && (x > 8 && 8 > 6)", || format!("n1: {n1}"))?;
    ensure(ts_violations(assertion, &s).map_err(|e| e.to_string())?.is_empty(), || "TS violations remain".into())?;
    Ok(format!("n1: {n1}"))
}

fn branch_options() -> Verdict {
    let s = solver();
    let t = corpus("branches").tree();
    let opts = branch_repair_options(&t, NodeId(2), &s).map_err(|e| e.to_string())?;
    let strategies: Vec<&BranchStrategy> = opts.iter().map(|o| &o.strategy).collect();
    let want = [BranchStrategy::Disjunction, BranchStrategy::Single("l1".into()), BranchStrategy::Single("l2".into())];
    ensure(want.iter().all(|w| strategies.contains(&w)), || format!("strategies {strategies:?}"))?;
    let l2 = opts.iter().find(|o| o.strategy == BranchStrategy::Single("l2".into())).expect("checked above");
    ensure(l2.dead_branches == ["l1"], || format!("l2 kills {:?}", l2.dead_branches))?;
    let disj = opts.iter().find(|o| o.strategy == BranchStrategy::Disjunction).expect("checked above");
    let plan = disj.plan.as_ref().ok_or("the disjunction option has no plan")?;
    let repaired = plan.tree.to_assertion();
    ensure(ts_violations(&repaired, &s).map_err(|e| e.to_string())?.is_empty(), || "TS violations remain".into())?;
    Ok(format!("{} options; the v < 5 option makes l1 dead", opts.len()))
}

fn guessing_game() -> Verdict {
    let s = solver();
    let out = phi3(&corpus("guessing_game"), &s);
    let RepairOutcome::Fixed { assertion, changes } = &out else {
        return Err(format!("expected a fix, got {out:?}"));
    };
    ensure(changes.len() == 3, || format!("{} iterations", changes.len()))?;
    let t = assertion.tree();
    for (c, var) in changes.iter().zip(["x", "y", "z"]) {
        let Label::Interaction(i) = t.label(c.node) else {
            return Err(format!("{} is not an interaction", c.node));
        };
        ensure(i.sender.as_str() == "Player" && i.vars == [var], || format!("{} is {}", c.node, t.label(c.node)))?;
        let pred = i.pred.to_string();
        ensure(pred == format!("true && {var} > 0"), || format!("{}: {pred}", c.node))?;
    }
    ensure(gsat(assertion, &Formula::True, &s).map_err(|e| e.to_string())?, || "gsat fails".into())?;
    Ok("x > 0, y > 0, z > 0 lifted".into())
}

fn option_with(s: &AmendSession, vid: &str, tag: RepairTag) -> Result<String, String> {
    let c = s.options(vid).map_err(|e| e.to_string())?;
    c.options.into_iter().find(|o| o.tag == tag).map(|o| o.id).ok_or_else(|| format!("no {tag} option for {vid}"))
}

fn walkthrough() -> Verdict {
    let src = std::fs::read_to_string(corpus_path("walkthrough")).map_err(|e| e.to_string())?;
    let mut s = AmendSession::from_source(&src, Arc::new(solver())).map_err(|e| e.to_string())?;
    let kinds: Vec<ViolationKind> = s.violations().iter().map(|v| v.kind).collect();
    let want = [ViolationKind::Hs, ViolationKind::Hs, ViolationKind::Ts, ViolationKind::Ts];
    ensure(kinds == want, || format!("found {kinds:?}"))?;

    s.apply(&option_with(&s, "hs-4", RepairTag::Phi1)?).map_err(|e| e.to_string())?;
    s.apply(&option_with(&s, "hs-5", RepairTag::Phi2)?).map_err(|e| e.to_string())?;
    let propagated = phi2(&corpus("running_strengthened"));
    let reference = print(propagated.assertion_or(&corpus("running_strengthened")));
    let head = |text: &str| text.lines().take(5).map(str::trim).collect::<Vec<_>>().join("\n");
    ensure(head(&s.text()) == head(&reference), || format!("first five lines:\n{}", head(&s.text())))?;

    s.apply(&option_with(&s, "ts-8", RepairTag::Phi3Lift)?).map_err(|e| e.to_string())?;
    let n2 = s.current().tree().predicate(NodeId(2)).to_string();
    ensure(n2 == "v >= v1 && v1 > 0", || format!("line 2 predicate {n2}"))?;

    let last = s.options("ts-10").map_err(|e| e.to_string())?;
    ensure(last.options.is_empty(), || "the last violation has options".into())?;
    let report = last.diagnostics.ok_or("no diagnostics")?;
    let vars: Vec<&str> = report.variables.iter().map(|v| v.var.as_str()).collect();
    ensure(vars == ["v1", "v3"], || format!("variables {vars:?}"))?;
    let insertion = "forall v1. exists v5. v1 < v5 && v5 < v3 - 2";
    ensure(report.summary.contains(insertion) && report.summary.contains("unsatisfiable"), || report.summary.clone())?;

    let status = Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(["amend", &corpus_path("walkthrough")])
        .env_remove("CHOREO_SOLVER_CMD")
        .output()
        .map_err(|e| e.to_string())?
        .status
        .code();
    ensure(status == Some(1), || format!("amend exited with {status:?}"))?;
    Ok("2 HS + 2 TS; line 7 unresolved; amend exits 1".into())
}

fn property_reports() -> Vec<Report> {
    let s = solver();
    let mut rng = ChaCha8Rng::seed_from_u64(PROPERTY_SEED);
    (0..PROPERTY_CASES).map(|_| check(&assertion(&mut rng, Limits::default()), &s)).collect()
}

fn property(reports: &[Report], p: Property) -> Verdict {
    let bad: Vec<String> =
        reports.iter().flat_map(|r| &r.counterexamples).filter(|c| c.property == p).map(|c| c.to_string()).collect();
    let skipped = reports.iter().flat_map(|r| &r.skipped).filter(|(q, _)| *q == p).count();
    let summary = format!("{} cases, {} counterexamples, {skipped} skipped", reports.len(), bad.len());
    if bad.len() > MAX_COUNTEREXAMPLES || skipped > 0 {
        let first = bad.first().map(|c| format!("\nfirst counterexample, {c}")).unwrap_or_default();
        return Err(summary + &first);
    }
    Ok(summary)
}

fn oracle_formulas() -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    (0..ORACLE_CASES).map(|_| confined_formula(&mut rng, ORACLE_BOUND)).collect()
}

fn oracle_validity() -> Verdict {
    let s = solver();
    let mut disagreements = Vec::new();
    for f in oracle_formulas() {
        let by_solver = s.is_valid(&f).map_err(|e| e.to_string())?;
        let by_enumeration = brute_force_valid(&f, -ORACLE_BOUND, ORACLE_BOUND, ENUMERATION_CAP).map_err(|e| e.to_string())?;
        if by_solver != by_enumeration {
            disagreements.push(f.to_string());
        }
    }
    let summary = format!("{ORACLE_CASES} formulas, {} disagreements", disagreements.len());
    ensure(disagreements.len() <= MAX_DISAGREEMENTS, || format!("{summary}; first: {}", disagreements[0]))?;
    Ok(summary)
}

fn oracle_elimination() -> Verdict {
    let mut envs: Vec<Vec<(String, i128)>> = vec![Vec::new()];
    for v in CONFINED_FREE {
        envs = envs
            .into_iter()
            .flat_map(|env| {
                (-ORACLE_BOUND..=ORACLE_BOUND).map(move |k| {
                    let mut env = env.clone();
                    env.push((v.to_string(), k as i128));
                    env
                })
            })
            .collect();
    }
    let mut disagreements = 0;
    for f in oracle_formulas() {
        let q = eliminate(&f, None).map_err(|e| e.to_string())?;
        ensure(!q.has_quantifiers(), || format!("{q} still has quantifiers"))?;
        for env in &envs {
            let mut env = env.clone();
            let mut steps = 0;
            let want = f.eval_bounded(&mut env, Some((-ORACLE_BOUND, ORACLE_BOUND)), &mut steps, ENUMERATION_CAP);
            let got = q.eval_bounded(&mut env, None, &mut steps, ENUMERATION_CAP);
            if want.is_none() || want != got {
                disagreements += 1;
            }
        }
    }
    let summary = format!("{ORACLE_CASES} formulas x {} assignments, {disagreements} disagreements", envs.len());
    ensure(disagreements <= MAX_DISAGREEMENTS, || summary.clone())?;
    Ok(summary)
}

fn main() -> ExitCode {
    let mut criteria: Vec<Criterion> = vec![
        ("hs-violations", Box::new(hs_violations_of_running)),
        ("strengthening", Box::new(strengthening)),
        ("propagation", Box::new(propagation)),
        ("relay-propagation", Box::new(relay_propagation)),
        ("conflict-lifting", Box::new(conflict_lifting)),
        ("invariant-lifting", Box::new(invariant_lifting)),
        ("branch-options", Box::new(branch_options)),
        ("guessing-game", Box::new(guessing_game)),
        ("walkthrough", Box::new(walkthrough)),
    ];
    let started = Instant::now();
    let reports = property_reports();
    let generated = started.elapsed();
    for (id, p) in [
        ("property-round-trip", Property::RoundTrip),
        ("property-structure", Property::Structure),
        ("property-preservation", Property::Preservation),
        ("property-correctness", Property::Correctness),
        ("property-strengthening", Property::Strengthening),
        ("property-propagation", Property::Propagation),
        ("property-leaf-contexts", Property::LeafContexts),
    ] {
        let reports = reports.clone();
        criteria.push((id, Box::new(move || property(&reports, p))));
    }
    criteria.push(("oracle-validity", Box::new(oracle_validity)));
    criteria.push(("oracle-elimination", Box::new(oracle_elimination)));

    println!("property cases generated and checked in {} ms", generated.as_millis());
    let mut unexpected = 0;
    for (id, run) in criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match verdict {
            Ok(detail) => println!("PASS  {id:<24} {detail} ({ms} ms)"),
            Err(detail) => {
                let note = if UNATTAINABLE.contains(&id) { " [known unattainable]" } else { "" };
                let (head, rest) = detail.split_once('\n').unwrap_or((&detail, ""));
                println!("FAIL  {id:<24} {head} ({ms} ms){note}");
                for line in rest.lines() {
                    println!("        {line}");
                }
                if note.is_empty() {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
