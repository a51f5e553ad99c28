use super::lexer::{Tok, Token};
use super::{Parsed, SourceSpan, SyntaxError};
use crate::ast::{Branch, GlobalAssertion, Interaction, Participant};
use crate::logic::{CmpOp, Expr, Formula};

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    spans: Vec<SourceSpan>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0, spans: Vec::new() }
    }

    pub(crate) fn assertion(mut self) -> PResult<Parsed> {
        let assertion = self.global()?;
        self.expect_eof()?;
        Ok(Parsed { assertion, spans: self.spans })
    }

    pub(crate) fn standalone_formula(mut self) -> PResult<Formula> {
        let f = self.formula()?;
        self.expect_eof()?;
        Ok(f)
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError { span: self.span(), message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> PResult<Token> {
        if self.peek() == &tok {
            Ok(self.bump())
        } else {
            self.unexpected(wanted)
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn ident(&mut self, wanted: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(wanted),
        }
    }

    /// Reserves the next preorder slot so children are numbered after it.
    fn open_node(&mut self) -> usize {
        self.spans.push(SourceSpan::default());
        self.spans.len() - 1
    }

    fn global(&mut self) -> PResult<GlobalAssertion> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(k) if k == "end" => {
                self.bump();
                self.spans.push(start);
                Ok(GlobalAssertion::End)
            }
            Tok::Ident(k) if k == "choice" => self.branching(),
            Tok::Ident(k) if k == "rec" => self.rec_def(),
            Tok::Ident(_) if self.peek_at(1) == &Tok::Lt => {
                let name = self.ident("recursion variable")?;
                let args = self.angle_list()?;
                self.spans.push(start.join(self.prev_span()));
                Ok(GlobalAssertion::RecCall { name, args })
            }
            Tok::Ident(_) => {
                let slot = self.open_node();
                let i = self.interaction()?;
                let here = start.join(self.prev_span());
                self.spans[slot] = here;
                let cont = if self.eat(&Tok::Dot) {
                    self.global()?
                } else {
                    let end = SourceSpan { start: here.end, end: here.end, ..self.prev_span() };
                    self.spans.push(end);
                    GlobalAssertion::End
                };
                Ok(GlobalAssertion::Prefix(i, Box::new(cont)))
            }
            _ => self.unexpected("an interaction, `choice`, `rec`, a recursion call or `end`"),
        }
    }

    fn interaction(&mut self) -> PResult<Interaction> {
        let sender = Participant(self.ident("sender")?);
        self.expect(Tok::Arrow, "`->`")?;
        let receiver = Participant(self.ident("receiver")?);
        self.expect(Tok::Colon, "`:`")?;
        let (vars, pred) = self.annotated_vars()?;
        Ok(Interaction { sender, receiver, vars, pred })
    }

    /// `( v1 v2 | F )`, variables separated by spaces or commas.
    fn annotated_vars(&mut self) -> PResult<(Vec<String>, Formula)> {
        self.expect(Tok::LParen, "`(`")?;
        let mut vars = Vec::new();
        while self.peek() != &Tok::Bar {
            vars.push(self.ident("a variable or `|`")?);
            self.eat(&Tok::Comma);
        }
        self.bump();
        let pred = self.formula()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok((vars, pred))
    }

    fn angle_list(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::Lt, "`<`")?;
        let mut out = Vec::new();
        if self.eat(&Tok::Gt) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(&Tok::Gt) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `>`")?;
        }
    }

    fn rec_def(&mut self) -> PResult<GlobalAssertion> {
        let start = self.span();
        self.bump();
        let slot = self.open_node();
        let name = self.ident("recursion variable")?;
        let init = self.angle_list()?;
        let (params, invariant) = self.annotated_vars()?;
        self.spans[slot] = start.join(self.prev_span());
        if params.len() != init.len() {
            return Err(SyntaxError {
                span: self.spans[slot],
                message: format!(
                    "recursion `{name}` has {} initial values for {} parameters",
                    init.len(),
                    params.len()
                ),
            });
        }
        self.expect(Tok::Dot, "`.`")?;
        let body = self.global()?;
        Ok(GlobalAssertion::RecDef { name, init, params, invariant, body: Box::new(body) })
    }

    fn branching(&mut self) -> PResult<GlobalAssertion> {
        let start = self.span();
        self.bump();
        let slot = self.open_node();
        let selector = Participant(self.ident("selector")?);
        self.expect(Tok::Arrow, "`->`")?;
        let receiver = Participant(self.ident("receiver")?);
        self.spans[slot] = start.join(self.prev_span());
        self.expect(Tok::LBrace, "`{`")?;
        let mut branches = Vec::new();
        loop {
            let arm_start = self.span();
            let arm = self.open_node();
            self.expect(Tok::LBrace, "`{` opening a guard")?;
            let guard = self.formula()?;
            self.expect(Tok::RBrace, "`}`")?;
            let label = self.ident("branch label")?;
            self.spans[arm] = arm_start.join(self.prev_span());
            self.expect(Tok::Colon, "`:`")?;
            let cont = self.global()?;
            branches.push(Branch { guard, label, cont });
            if self.eat(&Tok::RBrace) {
                break;
            }
            self.expect(Tok::Semi, "`;` or `}`")?;
        }
        Ok(GlobalAssertion::Branching { selector, receiver, branches })
    }

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.formula()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::OrOr) {
            let g = self.conjunction()?;
            f = f.or(g);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        while self.eat(&Tok::AndAnd) {
            let g = self.unary()?;
            f = f.and(g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Ident(k) if k == "exists" || k == "forall" => {
                self.bump();
                let mut vars = vec![self.ident("a bound variable")?];
                while self.peek() != &Tok::Dot {
                    self.eat(&Tok::Comma);
                    vars.push(self.ident("a bound variable or `.`")?);
                }
                self.bump();
                let body = self.formula()?;
                Ok(if k == "exists" { Formula::exists(vars, body) } else { Formula::forall(vars, body) })
            }
            Tok::Ident(k) if k == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Int(d) if self.peek_at(1) == &Tok::Bar => {
                self.bump();
                self.bump();
                if d == 0 {
                    return Err(SyntaxError { span: self.prev_span(), message: "divisor must be positive".into() });
                }
                Ok(Formula::Divides(d, self.expr()?))
            }
            Tok::LParen => {
                let save = self.pos;
                if let Ok(f) = self.comparison() {
                    return Ok(f);
                }
                self.pos = save;
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let mut lhs = self.expr()?;
        let mut parts = Vec::new();
        while let Some(op) = cmp_op(self.peek()) {
            self.bump();
            let rhs = self.expr()?;
            parts.push(Formula::Cmp(lhs, op, rhs.clone()));
            lhs = rhs;
        }
        if parts.is_empty() {
            return self.unexpected("a comparison operator");
        }
        let mut it = parts.into_iter();
        let first = it.next().unwrap_or(Formula::True);
        Ok(it.fold(first, Formula::and))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = e.add(self.term()?);
            } else if self.eat(&Tok::Minus) {
                e = e.sub(self.term()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.factor()?;
        while self.peek() == &Tok::Star {
            let at = self.span();
            self.bump();
            let rhs = self.factor()?;
            e = match (e, rhs) {
                (Expr::Int(c), r) => Expr::Mul(c, Box::new(r)),
                (l, Expr::Int(c)) => Expr::Mul(c, Box::new(l)),
                _ => {
                    return Err(SyntaxError {
                        span: at,
                        message: "only linear products (constant * expression) are supported".into(),
                    })
                }
            };
        }
        Ok(e)
    }

    fn factor(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Minus => {
                self.bump();
                Ok(match self.factor()? {
                    Expr::Int(n) => Expr::Int(-n),
                    e => Expr::Mul(-1, Box::new(e)),
                })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident("a variable")?)),
            _ => self.unexpected("an expression"),
        }
    }
}

fn cmp_op(t: &Tok) -> Option<CmpOp> {
    Some(match t {
        Tok::EqSign => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        _ => return None,
    })
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "end" | "choice" | "rec" | "exists" | "forall" | "true" | "false")
}
