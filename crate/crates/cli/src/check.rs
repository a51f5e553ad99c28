use std::path::Path;

use choreo_core::session::{AmendSession, Candidates, SessionError, Violation};
use serde_json::Value;

use crate::input::load;
use crate::{SolverArgs, CLEAN, SOLVER, USAGE, VIOLATIONS};

/// A violation with its options, in the `--json` layout.
pub fn violation_json(v: &Violation, c: &Candidates) -> Value {
    let mut obj = serde_json::to_value(v).expect("violations serialize");
    let map = obj.as_object_mut().expect("violations serialize to objects");
    map.insert("options".into(), serde_json::to_value(&c.options).expect("options serialize"));
    if let Some(d) = &c.diagnostics {
        map.insert("diagnostics".into(), serde_json::to_value(d).expect("reports serialize"));
    }
    obj
}

pub fn describe_violation(v: &Violation, c: &Candidates) -> String {
    let mut s = format!("{}  {}:{}  {}\n", v.kind, v.span.line, v.span.column, v.message);
    for o in &c.options {
        s += &format!("      [{}] {}\n", o.tag, o.rationale);
    }
    if let Some(d) = &c.diagnostics {
        s += &format!("      no repair applies: {}\n", d.summary);
    }
    s
}

pub fn exit_for(e: &SessionError) -> u8 {
    match e {
        SessionError::Solver(_) => SOLVER,
        _ => USAGE,
    }
}

pub fn run(file: &Path, json: bool, solver: &SolverArgs) -> u8 {
    let (text, _) = match load(file) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("{e}");
            return USAGE;
        }
    };
    let solver = match solver.solver() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return SOLVER;
        }
    };
    let result = AmendSession::from_source(&text, solver).and_then(|s| {
        let mut out = Vec::new();
        for v in s.violations() {
            out.push((v.clone(), s.options(&v.id)?));
        }
        Ok(out)
    });
    let found = match result {
        Ok(found) => found,
        Err(e) => {
            eprintln!("{e}");
            return exit_for(&e);
        }
    };
    if json {
        let arr: Vec<Value> = found.iter().map(|(v, c)| violation_json(v, c)).collect();
        println!("{}", serde_json::to_string_pretty(&arr).expect("json output"));
    } else if found.is_empty() {
        println!("well-asserted: no HS or TS violations");
    } else {
        for (v, c) in &found {
            print!("{}", describe_violation(v, c));
        }
    }
    if found.is_empty() {
        CLEAN
    } else {
        VIOLATIONS
    }
}
