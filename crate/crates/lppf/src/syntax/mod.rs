//! The `.lppf` language: syntax tree, parser and canonical renderer.

mod ast;
mod lexer;
mod parser;
mod render;
pub mod safety;
pub mod template;

use std::fmt;

use crate::value::{Assignment, Key, Value};

pub use ast::*;
pub use parser::parse;
pub use render::{atom, expr, literal, literals, render, render_directive, render_rule, term};

/// A diagnostic with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    /// `origin:line:col: message`
    pub fn display_with(&self, origin: &str) -> String {
        format!("{origin}:{}:{}: {}", self.line, self.col, self.message)
    }
}

/// Reads a ground assignment written as `p(a)`, `~p(a)` or `f(a)=v`.
pub fn parse_assignment(text: &str) -> Result<Assignment, ParseError> {
    let fail = |message: &str| ParseError {
        line: 1,
        col: 1,
        message: format!("{message}: `{}`", text.trim()),
    };
    let program = parse(&format!(":- {}.", text.trim()), "").map_err(|mut e| e.remove(0))?;
    let [rule] = program.rules.as_slice() else {
        return Err(fail("expected one assignment"));
    };
    let [lit] = rule.body.as_slice() else {
        return Err(fail("expected one assignment"));
    };
    let key_of = |f: &FuncTerm| -> Option<Key> {
        let args: Option<Vec<Value>> = f.args.iter().map(Term::as_value).collect();
        Some(Key::new(f.functor.clone(), args?))
    };
    let parsed = match &lit.payload {
        _ if lit.negated => None,
        Payload::Atom(f) => key_of(f).map(|k| Assignment::new(k, Value::truth(true))),
        Payload::NegAtom(f) => key_of(f).map(|k| Assignment::new(k, Value::truth(false))),
        Payload::Cmp(Expr::Term(Term::Func(f)), CmpOp::Eq, Expr::Term(v)) => {
            key_of(f).zip(v.as_value()).map(|(k, v)| Assignment::new(k, v))
        }
        Payload::Cmp(..) => None,
    };
    parsed.ok_or_else(|| fail("expected a ground assignment"))
}

/// Wrapper to print a batch of parse errors, one per line.
pub struct Diagnostics<'a> {
    pub origin: &'a str,
    pub errors: &'a [ParseError],
}

impl fmt::Display for Diagnostics<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.errors {
            writeln!(f, "{}", e.display_with(self.origin))?;
        }
        Ok(())
    }
}
