use crate::ast::{GlobalAssertion, Interaction};
use crate::logic::Expr;

/// Canonical source text: one construct per line, accepted by `parse`.
pub fn print(g: &GlobalAssertion) -> String {
    let mut out = String::new();
    write_global(g, 0, &mut out);
    out.push('\n');
    out
}

fn write_global(g: &GlobalAssertion, indent: usize, out: &mut String) {
    match g {
        GlobalAssertion::Prefix(i, cont) => {
            write_interaction(i, out);
            if **cont != GlobalAssertion::End {
                out.push_str(" .\n");
                pad(indent, out);
                write_global(cont, indent, out);
            }
        }
        GlobalAssertion::Branching { selector, receiver, branches } => {
            out.push_str(&format!("choice {selector} -> {receiver} {{\n"));
            for (k, b) in branches.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&format!("{{{}}} {} : ", b.guard, b.label));
                write_global(&b.cont, indent + 4, out);
                if k + 1 < branches.len() {
                    out.push_str(" ;");
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
        GlobalAssertion::RecDef { name, init, params, invariant, body } => {
            out.push_str(&format!("rec {name}<{}>({} | {invariant}) .\n", list(init), params.join(" ")));
            pad(indent + 2, out);
            write_global(body, indent + 2, out);
        }
        GlobalAssertion::RecCall { name, args } => out.push_str(&format!("{name}<{}>", list(args))),
        GlobalAssertion::End => out.push_str("end"),
    }
}

fn write_interaction(i: &Interaction, out: &mut String) {
    out.push_str(&format!("{} -> {} : ({} | {})", i.sender, i.receiver, i.vars.join(" "), i.pred));
}

fn list(es: &[Expr]) -> String {
    es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

fn pad(n: usize, out: &mut String) {
    out.extend(std::iter::repeat_n(' ', n));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn printed_text_parses_back() {
        let src = "rec t<10>(v | v > 0) . Alice -> Bob : (v1 | v >= v1) . \
                   choice Alice -> Bob { {true} cont : t<v1> ; \
                   {true} finish : Alice -> Bob : (v5 | v1 < v5 < v3 - 2) ; {false} idle : end }";
        let g = parse(src).unwrap().assertion;
        let text = print(&g);
        assert_eq!(parse(&text).unwrap().assertion, g);
        assert!(text.starts_with("rec t<10>(v | v > 0) .\n  Alice -> Bob"));
    }

    #[test]
    fn single_interaction_omits_end() {
        let g = parse("A -> B : (x, y | x < y) . end").unwrap().assertion;
        assert_eq!(print(&g), "A -> B : (x y | x < y)\n");
    }
}
