use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{safety, ParseError};

type PResult<T> = Result<T, ParseError>;

enum Stmt {
    Rule(Rule),
    Directive(Directive),
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    origin: &'a str,
}

/// Parses `.lppf` source text. All statement-level errors are collected;
/// a lexical error stops parsing immediately.
pub fn parse(source: &str, origin: &str) -> Result<Program, Vec<ParseError>> {
    let toks = tokenize(source).map_err(|e| vec![e])?;
    let mut p = Parser {
        toks,
        pos: 0,
        origin,
    };
    let mut program = Program::new();
    let mut errors = Vec::new();
    while p.peek() != &Tok::Eof {
        let (line, col) = p.position();
        match p.statement() {
            Ok(Stmt::Rule(rule)) => match safety::unsafe_variable(&rule) {
                Some(v) => errors.push(ParseError {
                    line,
                    col,
                    message: format!("unsafe variable `{v}` in rule"),
                }),
                None => program.rules.push(rule),
            },
            Ok(Stmt::Directive(d)) => match safety::unsafe_directive_variable(&d) {
                Some(v) => errors.push(ParseError {
                    line,
                    col,
                    message: format!("unsafe variable `{v}` in directive"),
                }),
                None => program.directives.push(d),
            },
            Err(e) => {
                errors.push(e);
                p.recover();
            }
        }
    }
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(errors)
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn position(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
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

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let (line, col) = self.position();
        Err(ParseError {
            line,
            col,
            message: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(what)
        }
    }

    /// Skips past the next `.` so parsing can resume at a statement boundary.
    fn recover(&mut self) {
        loop {
            match self.bump() {
                Tok::Dot | Tok::Eof => break,
                _ => {}
            }
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let (line, col) = self.position();
        let span = Span::new(self.origin, line, col);
        match self.peek().clone() {
            Tok::Hash(kind) if kind == "label" => {
                self.bump();
                let label = self.term()?;
                self.expect(Tok::LabelSep, "`::`")?;
                let pattern = self.func_term()?;
                self.expect(Tok::Dot, "`.`")?;
                Ok(Stmt::Directive(Directive::Label { label, pattern }))
            }
            Tok::Hash(kind) if kind == "explain" => {
                self.bump();
                let target = self.func_term()?;
                let conditions = if self.eat(&Tok::If) {
                    self.body()?
                } else {
                    Vec::new()
                };
                self.expect(Tok::Dot, "`.`")?;
                Ok(Stmt::Directive(Directive::Explain { target, conditions }))
            }
            Tok::Hash(_) => self.error("a rule or directive"),
            Tok::Str(text) => {
                // Both `"text" :: rule.` and `"text"` followed by the rule.
                self.bump();
                self.eat(&Tok::LabelSep);
                let mut rule = self.rule(span)?;
                rule.label = Some(Label::Text(text));
                Ok(Stmt::Rule(rule))
            }
            _ => {
                let label = self.try_term_label();
                let mut rule = self.rule(span)?;
                rule.label = label;
                Ok(Stmt::Rule(rule))
            }
        }
    }

    fn try_term_label(&mut self) -> Option<Label> {
        let save = self.pos;
        if let Ok(t) = self.term() {
            if self.eat(&Tok::LabelSep) {
                return Some(Label::Term(t));
            }
        }
        self.pos = save;
        None
    }

    fn rule(&mut self, span: Span) -> PResult<Rule> {
        let head = if self.eat(&Tok::If) {
            let body = self.body()?;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(Rule {
                label: None,
                head: Head::Constraint,
                body,
                span,
            });
        } else if self.eat(&Tok::Tilde) {
            Head::Deny(self.func_term()?)
        } else {
            let target = self.func_term()?;
            if self.eat(&Tok::Assign) {
                if matches!(self.peek(), Tok::Hash(k) if k == "sum") {
                    Head::Sum(target, self.aggregate()?)
                } else {
                    Head::Assign(target, self.expr()?)
                }
            } else if self.eat(&Tok::DefAssign) {
                Head::Default(target, self.expr()?)
            } else {
                Head::Assert(target)
            }
        };
        let body = if self.eat(&Tok::If) {
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok(Rule {
            label: None,
            head,
            body,
            span,
        })
    }

    fn aggregate(&mut self) -> PResult<SumAggregate> {
        self.bump();
        self.expect(Tok::LBrace, "`{`")?;
        let mut elements = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(SumAggregate { elements });
        }
        loop {
            let template = self.func_term()?;
            let conditions = if self.eat(&Tok::Colon) {
                self.literals_until(&[Tok::RBrace, Tok::Semi])?
            } else {
                Vec::new()
            };
            elements.push(AggElement {
                template,
                conditions,
            });
            if self.eat(&Tok::Semi) {
                continue;
            }
            self.expect(Tok::RBrace, "`;` or `}`")?;
            return Ok(SumAggregate { elements });
        }
    }

    fn literals_until(&mut self, end: &[Tok]) -> PResult<Vec<Literal>> {
        let mut out = vec![self.literal()?];
        while !end.contains(self.peek()) && self.eat(&Tok::Comma) {
            out.push(self.literal()?);
        }
        Ok(out)
    }

    fn body(&mut self) -> PResult<Vec<Literal>> {
        self.literals_until(&[Tok::Dot])
    }

    fn literal(&mut self) -> PResult<Literal> {
        let negated = if matches!(self.peek(), Tok::Ident(w) if w == "not") {
            self.bump();
            true
        } else {
            false
        };
        if self.eat(&Tok::Tilde) {
            let f = self.func_term()?;
            return Ok(Literal {
                negated,
                payload: Payload::NegAtom(f),
            });
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Eq => Some(CmpOp::Eq),
            Tok::Ne => Some(CmpOp::Ne),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Le => Some(CmpOp::Le),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::Ge => Some(CmpOp::Ge),
            _ => None,
        };
        let payload = match op {
            Some(op) => {
                self.bump();
                Payload::Cmp(lhs, op, self.expr()?)
            }
            None => match lhs {
                Expr::Term(Term::Func(f)) => Payload::Atom(f),
                Expr::Term(Term::Sym(s)) => Payload::Atom(FuncTerm::new(s, vec![])),
                _ => return self.error("a comparison operator"),
            },
        };
        Ok(Literal { negated, payload })
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(w) if w != "not" => {
                self.bump();
                Ok(w)
            }
            _ => self.error("a function name"),
        }
    }

    fn func_term(&mut self) -> PResult<FuncTerm> {
        let functor = self.ident()?;
        let args = if self.peek() == &Tok::LParen {
            self.args()?
        } else {
            Vec::new()
        };
        Ok(FuncTerm { functor, args })
    }

    fn args(&mut self) -> PResult<Vec<Term>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
            return Ok(args);
        }
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            Tok::Minus => match self.peek_at(1).clone() {
                Tok::Int(n) => {
                    self.bump();
                    self.bump();
                    Ok(Term::Int(-n))
                }
                _ => {
                    self.bump();
                    self.error("an integer")
                }
            },
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Str(s))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.peek() == &Tok::LParen {
                    Ok(Term::Func(FuncTerm::new(name, self.args()?)))
                } else {
                    Ok(Term::Sym(name))
                }
            }
            _ => self.error("a term"),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn product(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Term(Term::Int(n)) => Expr::Term(Term::Int(-n)),
                other => Expr::Binary(
                    Box::new(Expr::Term(Term::Int(0))),
                    ArithOp::Sub,
                    Box::new(other),
                ),
            });
        }
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        match self.peek() {
            Tok::Var(_) | Tok::Int(_) | Tok::Str(_) | Tok::Ident(_) => Ok(Expr::Term(self.term()?)),
            _ => self.error("an expression"),
        }
    }
}
