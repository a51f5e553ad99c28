use super::{SourceSpan, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Arrow,
    Colon,
    LParen,
    RParen,
    Bar,
    Dot,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Lt,
    Le,
    Gt,
    Ge,
    EqSign,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Implies,
    Plus,
    Minus,
    Star,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Arrow => "->",
            Tok::Colon => ":",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Bar => "|",
            Tok::Dot => ".",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqSign => "=",
            Tok::Ne => "!=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Implies => "=>",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let column = src[line_start..start].chars().count() + 1;
        let two = if i + 1 < bytes.len() { &src[i..i + 2] } else { "" };
        let (tok, len) = if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'\'') {
                j += 1;
            }
            (Tok::Ident(src[i..j].to_string()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let value = src[i..j].parse::<i64>().map_err(|_| SyntaxError {
                span: SourceSpan { start, end: j, line, column },
                message: "integer literal out of range".into(),
            })?;
            (Tok::Int(value), j - i)
        } else {
            match two {
                "->" => (Tok::Arrow, 2),
                "<=" => (Tok::Le, 2),
                ">=" => (Tok::Ge, 2),
                "!=" => (Tok::Ne, 2),
                "&&" => (Tok::AndAnd, 2),
                "||" => (Tok::OrOr, 2),
                "=>" => (Tok::Implies, 2),
                _ => {
                    let t = match c {
                        b':' => Tok::Colon,
                        b'(' => Tok::LParen,
                        b')' => Tok::RParen,
                        b'|' => Tok::Bar,
                        b'.' => Tok::Dot,
                        b'{' => Tok::LBrace,
                        b'}' => Tok::RBrace,
                        b';' => Tok::Semi,
                        b',' => Tok::Comma,
                        b'<' => Tok::Lt,
                        b'>' => Tok::Gt,
                        b'=' => Tok::EqSign,
                        b'!' => Tok::Bang,
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        b'*' => Tok::Star,
                        _ => {
                            let ch = src[i..].chars().next().unwrap_or('?');
                            return Err(SyntaxError {
                                span: SourceSpan { start, end: start + ch.len_utf8(), line, column },
                                message: format!("unexpected character `{ch}`"),
                            });
                        }
                    };
                    (t, 1)
                }
            }
        };
        i += len;
        out.push(Token { tok, span: SourceSpan { start, end: i, line, column } });
    }
    let column = src[line_start..].chars().count() + 1;
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan { start: src.len(), end: src.len(), line, column },
    });
    Ok(out)
}
