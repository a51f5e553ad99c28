use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use choreo_core::ast::GlobalAssertion;
use choreo_core::hs::{hs_violations, phi1, phi2};
use choreo_core::logic::Solver;
use choreo_core::parser::print;
use choreo_core::repair::{FailReason, RepairOutcome};
use choreo_core::session::{auto_amend, diagnose_text, AmendSession, Edit, Warning};
use choreo_core::ts::{conflict_diagnostics, phi3, ts_violations};
use serde_json::{json, Value};

use crate::check::{describe_violation, exit_for};
use crate::input::load;
use crate::{SolverArgs, Strategy, CLEAN, SOLVER, USAGE, VIOLATIONS};

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(file: &Path, strategy: Strategy, interactive: bool, out: Option<&Path>, json: bool, args: &SolverArgs) -> u8 {
    if interactive && file.as_os_str() == "-" {
        eprintln!("--interactive reads choices from standard input; give the assertion as a file");
        return USAGE;
    }
    let (text, g) = match load(file) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("{e}");
            return USAGE;
        }
    };
    let solver = match args.solver() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return SOLVER;
        }
    };
    if interactive {
        return prompt_loop(&text, solver, out);
    }
    match strategy {
        Strategy::Auto => auto(&text, solver, out, json),
        _ => single(&text, &g, strategy, solver.as_ref(), out, json),
    }
}

fn finish(text: &str, out: Option<&Path>, json: bool, mut report: Value, code: u8) -> u8 {
    if json {
        if out.is_none() {
            report["text"] = Value::String(text.to_string());
        }
        println!("{}", serde_json::to_string_pretty(&report).expect("json output"));
        if let Some(path) = out {
            if let Err(e) = emit(text, Some(path)) {
                eprintln!("{e}");
                return USAGE;
            }
        }
    } else if let Err(e) = emit(text, out) {
        eprintln!("{e}");
        return USAGE;
    }
    code
}

fn single(text: &str, g: &GlobalAssertion, strategy: Strategy, solver: &dyn Solver, out: Option<&Path>, json: bool) -> u8 {
    let outcome = match strategy {
        Strategy::Phi1 => phi1(g, solver),
        Strategy::Phi2 => phi2(g),
        _ => phi3(g, solver),
    };
    let result = outcome.assertion_or(g).clone();
    let new_text = if matches!(outcome, RepairOutcome::Unchanged) { text.to_string() } else { print(&result) };
    for c in outcome.changes() {
        if !json {
            eprintln!("{c}");
        }
    }
    let scope = match strategy {
        Strategy::Phi3 => ts_violations(&result, solver).map(|v| v.is_empty()),
        _ => Ok(hs_violations(&result).is_empty()),
    };
    let mut code = match scope {
        Ok(true) => CLEAN,
        Ok(false) => VIOLATIONS,
        Err(e) => {
            eprintln!("solver error: {e}");
            SOLVER
        }
    };
    let mut report = json!({
        "strategy": format!("{strategy:?}").to_lowercase(),
        "changes": outcome.changes().iter().map(Edit::from_change).collect::<Vec<_>>(),
    });
    match &outcome {
        RepairOutcome::Fixed { .. } => report["status"] = json!("fixed"),
        RepairOutcome::Unchanged => report["status"] = json!("unchanged"),
        RepairOutcome::Failed { node, reason, .. } => {
            report["status"] = json!("failed");
            report["failedAt"] = json!(node);
            report["reason"] = json!(reason.to_string());
            if !json {
                eprintln!("failed at {node}: {reason}");
            }
            if strategy == Strategy::Phi3 {
                if let Ok(d) = conflict_diagnostics(&result.tree(), *node, solver) {
                    if !json && !d.is_empty() {
                        eprintln!("{}", d.summary);
                    }
                    report["diagnostics"] = serde_json::to_value(&d).expect("reports serialize");
                }
            }
            if matches!(reason, FailReason::Solver(_)) {
                code = SOLVER;
            }
        }
    }
    if let Ok(remaining) = diagnose_text(&result, &new_text, solver) {
        report["remaining"] = serde_json::to_value(&remaining).expect("violations serialize");
    }
    finish(&new_text, out, json, report, code)
}

fn auto(text: &str, solver: Arc<dyn Solver>, out: Option<&Path>, json: bool) -> u8 {
    let mut session = match AmendSession::from_source(text, solver) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return exit_for(&e);
        }
    };
    let report = match auto_amend(&mut session) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            let _ = emit(&session.text(), out);
            return exit_for(&e);
        }
    };
    if !json {
        for h in &report.applied {
            eprintln!("applied {} for {}", h.tag, h.violation);
            for c in &h.changes {
                eprintln!("  {c}");
            }
        }
        for u in &report.unresolved {
            eprintln!("unresolved {}: {}", u.violation.id, u.violation.message);
            if let Some(d) = &u.diagnostics {
                eprintln!("  {}", d.summary);
            }
        }
    }
    let code = if report.is_clean() { CLEAN } else { VIOLATIONS };
    let value = serde_json::to_value(&report).expect("reports serialize");
    finish(&report.text, out, json, value, code)
}

fn ask(prompt: &str, lines: &mut impl Iterator<Item = String>) -> Option<String> {
    eprint!("{prompt}");
    let _ = std::io::stderr().flush();
    lines.next().map(|l| l.trim().to_string())
}

fn prompt_loop(text: &str, solver: Arc<dyn Solver>, out: Option<&Path>) -> u8 {
    let mut session = match AmendSession::from_source(text, solver) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return exit_for(&e);
        }
    };
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines().map_while(Result::ok);
    loop {
        let violations = session.violations().to_vec();
        if violations.is_empty() {
            eprintln!("well-asserted: no HS or TS violations");
            break;
        }
        for (i, v) in violations.iter().enumerate() {
            eprintln!("{:>3}. {}  line {}  {}", i + 1, v.kind, v.span.line, v.message);
        }
        let Some(answer) = ask("violation number, u to undo, w to write and quit, q to quit> ", &mut lines) else {
            break;
        };
        match answer.as_str() {
            "q" => return VIOLATIONS,
            "w" | "" => break,
            "u" => {
                if let Err(e) = session.undo() {
                    eprintln!("{e}");
                }
                continue;
            }
            _ => {}
        }
        let Some(v) = answer.parse::<usize>().ok().and_then(|i| violations.get(i.wrapping_sub(1))) else {
            eprintln!("no such violation");
            continue;
        };
        let candidates = match session.options(&v.id) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return exit_for(&e);
            }
        };
        eprint!("{}", describe_violation(v, &candidates));
        if candidates.options.is_empty() {
            continue;
        }
        for (i, o) in candidates.options.iter().enumerate() {
            eprintln!("{:>3}. [{}] {}", i + 1, o.tag, o.rationale);
            for w in &o.warnings {
                match w {
                    Warning::Disclosure(d) => {
                        let who: Vec<&str> = d.participants.iter().map(|p| p.as_str()).collect();
                        eprintln!("       discloses {} to {}", d.variable, who.join(", "));
                    }
                    Warning::DeadBranch { label } => eprintln!("       branch {label} can no longer be taken"),
                    Warning::Interference { message, .. } => eprintln!("       {message}"),
                }
            }
        }
        let Some(pick) = ask("option number (empty to go back)> ", &mut lines) else { break };
        let Some(choice) = pick.parse::<usize>().ok().and_then(|i| candidates.options.get(i.wrapping_sub(1))) else {
            continue;
        };
        if let Err(e) = session.apply(&choice.id) {
            eprintln!("{e}");
        }
    }
    if let Err(e) = emit(&session.text(), out) {
        eprintln!("{e}");
        return USAGE;
    }
    if session.violations().is_empty() {
        CLEAN
    } else {
        VIOLATIONS
    }
}
