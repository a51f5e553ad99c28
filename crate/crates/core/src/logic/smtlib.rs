//! SMT-LIB 2 rendering and an external solver reached over a pipe.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::formula::{CmpOp, Expr, Formula};
use super::solver::Solver;
use super::LogicError;

fn quote(name: &str) -> String {
    let simple = name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit());
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) if *n < 0 => format!("(- {})", (*n as i128).abs()),
        Expr::Int(n) => n.to_string(),
        Expr::Var(v) => quote(v),
        Expr::Add(a, b) => format!("(+ {} {})", expr(a), expr(b)),
        Expr::Sub(a, b) => format!("(- {} {})", expr(a), expr(b)),
        Expr::Mul(c, a) => format!("(* {} {})", expr(&Expr::Int(*c)), expr(a)),
    }
}

/// Renders `f` as an SMT-LIB term over the `Int` sort.
pub fn term(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Cmp(a, op, b) => {
            let (a, b) = (expr(a), expr(b));
            match op {
                CmpOp::Eq => format!("(= {a} {b})"),
                CmpOp::Ne => format!("(not (= {a} {b}))"),
                CmpOp::Lt => format!("(< {a} {b})"),
                CmpOp::Le => format!("(<= {a} {b})"),
                CmpOp::Gt => format!("(> {a} {b})"),
                CmpOp::Ge => format!("(>= {a} {b})"),
            }
        }
        Formula::Divides(d, e) => format!("(= (mod {} {}) 0)", expr(e), d),
        Formula::Not(a) => format!("(not {})", term(a)),
        Formula::And(a, b) => format!("(and {} {})", term(a), term(b)),
        Formula::Or(a, b) => format!("(or {} {})", term(a), term(b)),
        Formula::Implies(a, b) => format!("(=> {} {})", term(a), term(b)),
        Formula::Exists(vs, body) | Formula::Forall(vs, body) => {
            let q = if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" };
            let binders: Vec<String> = vs.iter().map(|v| format!("({} Int)", quote(v))).collect();
            format!("({q} ({}) {})", binders.join(" "), term(body))
        }
    }
}

/// A complete script asking whether `f` is satisfiable.
pub fn sat_script(f: &Formula) -> String {
    let mut out = String::from("(set-logic LIA)\n");
    for v in f.free_vars() {
        out.push_str(&format!("(declare-const {} Int)\n", quote(&v)));
    }
    out.push_str(&format!("(assert {})\n(check-sat)\n(exit)\n", term(f)));
    out
}

/// A script whose answer is `unsat` exactly when `f` is valid.
pub fn validity_script(f: &Formula) -> String {
    sat_script(&f.clone().not())
}

/// Runs an SMT-LIB solver as a child process for each query.
pub struct SmtLibProcess {
    argv: Vec<String>,
    timeout: Duration,
    cache: Mutex<HashMap<Formula, bool>>,
}

impl SmtLibProcess {
    /// `argv[0]` is the executable; the script is written to its stdin.
    pub fn new(argv: Vec<String>, timeout: Duration) -> Self {
        SmtLibProcess { argv, timeout, cache: Mutex::new(HashMap::new()) }
    }

    fn check_sat(&self, f: &Formula) -> Result<bool, LogicError> {
        if let Some(hit) = self.cache.lock().unwrap().get(f) {
            return Ok(*hit);
        }
        let (exe, args) = self
            .argv
            .split_first()
            .ok_or_else(|| LogicError::External("empty solver command".into()))?;
        let mut child = Command::new(exe)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| LogicError::External(format!("cannot start `{exe}`: {e}")))?;
        let script = sat_script(f);
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(script.as_bytes())
            .map_err(|e| LogicError::External(e.to_string()))?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let deadline = Instant::now() + self.timeout;
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(LogicError::Timeout);
                }
                Ok(None) => thread::sleep(Duration::from_millis(2)),
                Err(e) => return Err(LogicError::External(e.to_string())),
            }
        }
        let out = reader.join().unwrap_or_default();
        let answer = match out.lines().map(str::trim).find(|l| !l.is_empty()) {
            Some("sat") => true,
            Some("unsat") => false,
            Some("unknown") => return Err(LogicError::Timeout),
            other => {
                return Err(LogicError::External(format!(
                    "unexpected solver output: {}",
                    other.unwrap_or("<empty>")
                )))
            }
        };
        self.cache.lock().unwrap().insert(f.clone(), answer);
        Ok(answer)
    }
}

impl Solver for SmtLibProcess {
    fn name(&self) -> &str {
        "smtlib-process"
    }

    fn is_satisfiable(&self, f: &Formula) -> Result<bool, LogicError> {
        self.check_sat(f)
    }

    fn is_valid(&self, f: &Formula) -> Result<bool, LogicError> {
        self.check_sat(&f.clone().not()).map(|sat| !sat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_quantifiers_and_divisibility() {
        let f = Formula::exists(
            vec!["z".into()],
            Formula::gt("x", "z").and(Formula::Divides(2, Expr::var("z"))),
        );
        assert_eq!(term(&f), "(exists ((z Int)) (and (> x z) (= (mod z 2) 0)))");
        let s = validity_script(&Formula::gt("v'", -1));
        assert!(s.contains("(declare-const |v'| Int)"));
        assert!(s.contains("(assert (not (> |v'| (- 1))))"));
    }

    #[test]
    fn missing_executable_is_reported() {
        let p = SmtLibProcess::new(vec!["/nonexistent/solver".into()], Duration::from_secs(1));
        assert!(matches!(p.is_valid(&Formula::True), Err(LogicError::External(_))));
    }
}
