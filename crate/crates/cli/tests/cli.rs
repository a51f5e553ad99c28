use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn corpus(name: &str) -> String {
    format!("{}/../core/corpus/{name}.ga", env!("CARGO_MANIFEST_DIR"))
}

fn choreo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_choreo")).args(args).env_remove("CHOREO_SOLVER_CMD").output().unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(args)
        .env_remove("CHOREO_SOLVER_CMD")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_exit_codes() {
    assert_eq!(code(&choreo(&["check", &corpus("increasing")])), 0);
    assert_eq!(code(&choreo(&["check", &corpus("running")])), 1);
    assert_eq!(code(&choreo(&["check", &corpus("walkthrough")])), 1);
    assert_eq!(code(&choreo(&["check", "/nonexistent/file.ga"])), 2);
    assert_eq!(code(&choreo(&["frobnicate"])), 2);
}

#[test]
fn parse_errors_carry_positions() {
    let o = with_stdin(&["check", "-"], "A -> B : (x | x > 0) .\n  )");
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.starts_with("-:2:"), "{err}");
}

#[test]
fn stdin_input_matches_file_input() {
    let text = std::fs::read_to_string(corpus("walkthrough")).unwrap();
    let from_file = choreo(&["check", "--json", &corpus("walkthrough")]);
    let from_stdin = with_stdin(&["check", "--json", "-"], &text);
    assert_eq!(code(&from_stdin), 1);
    assert_eq!(from_file.stdout, from_stdin.stdout);
}

#[test]
fn json_output_is_stable_and_complete() {
    let a = choreo(&["check", "--json", &corpus("walkthrough")]);
    let b = choreo(&["check", "--json", &corpus("walkthrough")]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 4);
    for item in arr {
        for field in ["id", "kind", "node", "span", "message", "options"] {
            assert!(item.get(field).is_some(), "missing {field} in {item}");
        }
        assert!(item["span"]["line"].as_u64().unwrap() >= 1);
    }
    let kinds: Vec<&str> = arr.iter().map(|i| i["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, vec!["HS", "HS", "TS", "TS"]);
    let last = &arr[3];
    assert_eq!(last["options"], Value::Array(vec![]));
    assert!(last["diagnostics"]["summary"].as_str().unwrap().contains("Carol"));
}

#[test]
fn auto_amend_leaves_one_violation() {
    let o = choreo(&["amend", &corpus("walkthrough")]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("applied phi1"), "{err}");
    assert!(err.contains("applied phi2"), "{err}");
    assert!(err.contains("unresolved ts-"), "{err}");
    assert!(stdout(&o).contains("Bob -> Carol : (v2 u1 | v2 > v1 && u1 = v)"), "{}", stdout(&o));
}

#[test]
fn phi2_writes_the_amended_assertion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g2.ga");
    let o = choreo(&["amend", "--strategy", "phi2", "--out", out.to_str().unwrap(), &corpus("running_strengthened")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written = std::fs::read_to_string(&out).unwrap();
    assert!(written.contains("Carol -> Bob : (v4 | v4 > u1)"), "{written}");
    let check = choreo(&["check", "--json", out.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&check.stdout).unwrap();
    let kinds: Vec<&str> = v.as_array().unwrap().iter().map(|i| i["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, vec!["TS"], "{written}");
}

#[test]
fn amending_a_clean_file_is_the_identity() {
    let text = std::fs::read_to_string(corpus("increasing")).unwrap();
    for strategy in ["phi1", "phi2", "phi3", "auto"] {
        let o = choreo(&["amend", "--strategy", strategy, &corpus("increasing")]);
        assert_eq!(code(&o), 0, "{strategy}");
        assert_eq!(stdout(&o), text, "{strategy}");
    }
}

#[test]
fn amend_json_reports_status() {
    let o = choreo(&["amend", "--strategy", "phi3", "--json", &corpus("invariant")]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "fixed");
    assert_eq!(v["remaining"], Value::Array(vec![]));
    assert!(v["text"].as_str().unwrap().contains("x > 8"));
}

#[test]
fn unusable_solver_command_exits_3() {
    let bad = "/nonexistent/solver -in";
    let o = Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(["check", &corpus("increasing")])
        .env("CHOREO_SOLVER_CMD", bad)
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(code(&choreo(&["check", "--solver-cmd", bad, &corpus("increasing")])), 3);
    assert_eq!(code(&choreo(&["serve", "--port", "0", "--solver-cmd", bad])), 3);
}

#[test]
fn serve_answers_health_checks() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(["serve", "--port", "0"])
        .env_remove("CHOREO_SOLVER_CMD")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("{line}")).to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    let _ = child.wait();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(r#"{"status":"ok"}"#), "{response}");
}
