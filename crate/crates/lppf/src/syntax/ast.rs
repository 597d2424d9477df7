//! Abstract syntax of `.lppf` programs.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Int(i64),
    Sym(String),
    Str(String),
    Func(FuncTerm),
}

impl Term {
    pub fn as_value(&self) -> Option<Value> {
        match self {
            Term::Int(n) => Some(Value::Int(*n)),
            Term::Sym(s) => Some(Value::Sym(s.clone())),
            Term::Str(s) => Some(Value::Str(s.clone())),
            Term::Var(_) | Term::Func(_) => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Func(f) => f.is_ground(),
            _ => true,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Func(f) => f.collect_vars(out),
            _ => {}
        }
    }

    pub fn walk_funcs<'a>(&'a self, visit: &mut impl FnMut(&'a FuncTerm)) {
        if let Term::Func(f) = self {
            f.walk_funcs(visit);
        }
    }
}

impl From<Value> for Term {
    fn from(v: Value) -> Self {
        match v {
            Value::Int(n) => Term::Int(n),
            Value::Sym(s) => Term::Sym(s),
            Value::Str(s) => Term::Str(s),
        }
    }
}

/// A function applied to arguments. Arguments that are themselves function
/// terms are evaluated, so `h(g(1))` means `h` applied to the value of `g(1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncTerm {
    pub functor: String,
    pub args: Vec<Term>,
}

impl FuncTerm {
    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> Self {
        FuncTerm {
            functor: functor.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// True when every argument is a constant, i.e. the key is known
    /// without evaluating anything.
    pub fn has_constant_args(&self) -> bool {
        self.args.iter().all(|a| a.as_value().is_some())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    /// Visits this term and every function term nested in its arguments.
    pub fn walk_funcs<'a>(&'a self, visit: &mut impl FnMut(&'a FuncTerm)) {
        visit(self);
        for a in &self.args {
            a.walk_funcs(visit);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Term(Term),
    Binary(Box<Expr>, ArithOp, Box<Expr>),
}

impl Expr {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Term(t) => t.collect_vars(out),
            Expr::Binary(l, _, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn walk_funcs<'a>(&'a self, visit: &mut impl FnMut(&'a FuncTerm)) {
        match self {
            Expr::Term(t) => t.walk_funcs(visit),
            Expr::Binary(l, _, r) => {
                l.walk_funcs(visit);
                r.walk_funcs(visit);
            }
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expr::Term(Term::Var(v)) => Some(v),
            _ => None,
        }
    }
}

impl From<Term> for Expr {
    fn from(t: Term) -> Self {
        Expr::Term(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: &Value, rhs: &Value) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payload {
    /// `p(a)`: the Boolean function is true.
    Atom(FuncTerm),
    /// `~p(a)`: the Boolean function is false.
    NegAtom(FuncTerm),
    Cmp(Expr, CmpOp, Expr),
}

impl Payload {
    pub fn walk_funcs<'a>(&'a self, visit: &mut impl FnMut(&'a FuncTerm)) {
        match self {
            Payload::Atom(f) | Payload::NegAtom(f) => f.walk_funcs(visit),
            Payload::Cmp(l, _, r) => {
                l.walk_funcs(visit);
                r.walk_funcs(visit);
            }
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Payload::Atom(f) | Payload::NegAtom(f) => f.collect_vars(out),
            Payload::Cmp(l, _, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

/// A body literal; `negated` is default negation (`not`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub negated: bool,
    pub payload: Payload,
}

impl Literal {
    pub fn pos(payload: Payload) -> Self {
        Literal {
            negated: false,
            payload,
        }
    }

    pub fn not(payload: Payload) -> Self {
        Literal {
            negated: true,
            payload,
        }
    }
}

/// One `template : conditions` element of a `#sum`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AggElement {
    pub template: FuncTerm,
    pub conditions: Vec<Literal>,
}

/// `#sum{ g(X,C) : dom(C); ... }`. Each distinct ground function term
/// contributes its value once; undefined terms contribute nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SumAggregate {
    pub elements: Vec<AggElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Head {
    Assert(FuncTerm),
    Deny(FuncTerm),
    Assign(FuncTerm, Expr),
    Default(FuncTerm, Expr),
    Sum(FuncTerm, SumAggregate),
    Constraint,
}

impl Head {
    pub fn target(&self) -> Option<&FuncTerm> {
        match self {
            Head::Assert(t)
            | Head::Deny(t)
            | Head::Assign(t, _)
            | Head::Default(t, _)
            | Head::Sum(t, _) => Some(t),
            Head::Constraint => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    /// Natural-language text; `%Var` is replaced by the variable's binding.
    Text(String),
    /// A label term, displayed as written once ground.
    Term(Term),
}

/// Source position of a statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Span {
    pub origin: Arc<str>,
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(origin: &str, line: usize, col: usize) -> Self {
        Span {
            origin: Arc::from(origin),
            line,
            col,
        }
    }

    pub fn synthetic() -> Self {
        Span::new("<generated>", 0, 0)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.origin, self.line, self.col)
    }
}

/// A rule. Equality is structural and ignores the source span.
#[derive(Debug, Clone)]
pub struct Rule {
    pub label: Option<Label>,
    pub head: Head,
    pub body: Vec<Literal>,
    pub span: Span,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.head == other.head && self.body == other.body
    }
}

impl Eq for Rule {}

impl Rule {
    pub fn new(head: Head, body: Vec<Literal>) -> Self {
        Rule {
            label: None,
            head,
            body,
            span: Span::synthetic(),
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty() && matches!(self.head, Head::Assert(_) | Head::Deny(_) | Head::Assign(..))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match &self.head {
            Head::Assert(t) | Head::Deny(t) => t.collect_vars(&mut out),
            Head::Assign(t, e) | Head::Default(t, e) => {
                t.collect_vars(&mut out);
                e.collect_vars(&mut out);
            }
            Head::Sum(t, agg) => {
                t.collect_vars(&mut out);
                for el in &agg.elements {
                    el.template.collect_vars(&mut out);
                    for c in &el.conditions {
                        c.payload.collect_vars(&mut out);
                    }
                }
            }
            Head::Constraint => {}
        }
        for l in &self.body {
            l.payload.collect_vars(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Directive {
    /// `#label L :: f(X).`
    Label { label: Term, pattern: FuncTerm },
    /// `#explain f(X) :- conditions.`
    Explain {
        target: FuncTerm,
        conditions: Vec<Literal>,
    },
}

/// A parsed program. Rule order carries no meaning beyond rendering and
/// diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub directives: Vec<Directive>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&mut self, other: Program) {
        self.rules.extend(other.rules);
        self.directives.extend(other.directives);
    }

    pub fn has_labels(&self) -> bool {
        self.rules.iter().any(|r| r.label.is_some())
            || self
                .directives
                .iter()
                .any(|d| matches!(d, Directive::Label { .. }))
    }

    pub fn explain_directives(&self) -> impl Iterator<Item = &Directive> {
        self.directives
            .iter()
            .filter(|d| matches!(d, Directive::Explain { .. }))
    }
}
