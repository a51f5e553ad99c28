use std::io::Read;
use std::path::Path;

use choreo_core::ast::GlobalAssertion;
use choreo_core::parser::parse;

/// Reads `file` ("-" for standard input) and parses it. Errors are printed
/// as `name:line:column: message`.
pub fn load(file: &Path) -> Result<(String, GlobalAssertion), String> {
    let name = file.display().to_string();
    let text = if name == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("<stdin>: {e}"))?;
        s
    } else {
        std::fs::read_to_string(file).map_err(|e| format!("{name}: {e}"))?
    };
    let parsed = parse(&text).map_err(|e| format!("{name}:{}:{}: {}", e.span.line, e.span.column, e.message))?;
    let defects = parsed.defects();
    if !defects.is_empty() {
        let all: Vec<String> = defects.iter().map(|(d, s)| format!("{name}:{}:{}: {d}", s.line, s.column)).collect();
        return Err(all.join("\n"));
    }
    Ok((text, parsed.assertion))
}
