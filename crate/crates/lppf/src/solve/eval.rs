//! Evaluation of expressions, body literals and rule instances against a
//! partial valuation.

use std::collections::{BTreeMap, BTreeSet};

use crate::ground::GroundRule;
use crate::syntax::template;
use crate::syntax::*;
use crate::value::{Assignment, Key, Value};

use super::{EvalError, Valuation};

/// Values of the variables a rule binds while solving.
pub(crate) type Env = BTreeMap<String, Value>;

/// Where function values are looked up.
pub(crate) trait Lookup {
    fn value(&self, key: &Key) -> Option<&Value>;
}

impl Lookup for Valuation {
    fn value(&self, key: &Key) -> Option<&Value> {
        self.get(key)
    }
}

impl Lookup for BTreeMap<Key, Value> {
    fn value(&self, key: &Key) -> Option<&Value> {
        self.get(key)
    }
}

pub(crate) struct Ctx<'a> {
    pub lookup: &'a dyn Lookup,
    pub env: &'a Env,
    pub span: &'a Span,
    /// Collects every function value consulted, when set.
    pub reads: Option<&'a mut BTreeSet<Assignment>>,
}

impl Ctx<'_> {
    fn note(&mut self, key: &Key, value: &Value) {
        if let Some(r) = self.reads.as_deref_mut() {
            r.insert(Assignment::new(key.clone(), value.clone()));
        }
    }

    pub fn term(&mut self, t: &Term) -> Result<Option<Value>, EvalError> {
        match t {
            Term::Var(v) => Ok(self.env.get(v).cloned()),
            Term::Func(f) => {
                let Some(key) = self.key(f)? else {
                    return Ok(None);
                };
                let value = self.lookup.value(&key).cloned();
                if let Some(v) = &value {
                    self.note(&key, v);
                }
                Ok(value)
            }
            other => Ok(other.as_value()),
        }
    }

    /// The key a function term denotes, evaluating nested arguments.
    pub fn key(&mut self, f: &FuncTerm) -> Result<Option<Key>, EvalError> {
        let mut args = Vec::with_capacity(f.args.len());
        for a in &f.args {
            match self.term(a)? {
                Some(v) => args.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(Key::new(f.functor.clone(), args)))
    }

    pub fn expr(&mut self, e: &Expr) -> Result<Option<Value>, EvalError> {
        match e {
            Expr::Term(t) => self.term(t),
            Expr::Binary(l, op, r) => {
                let (Some(a), Some(b)) = (self.expr(l)?, self.expr(r)?) else {
                    return Ok(None);
                };
                arith(&a, *op, &b, self.span).map(Some)
            }
        }
    }

    /// Whether a literal's payload holds (ignoring any `not`).
    pub fn payload(&mut self, p: &Payload) -> Result<bool, EvalError> {
        match p {
            Payload::Atom(f) | Payload::NegAtom(f) => {
                let want = matches!(p, Payload::Atom(_));
                let Some(key) = self.key(f)? else {
                    return Ok(false);
                };
                match self.lookup.value(&key).cloned() {
                    Some(v) if v.as_bool() == Some(want) => {
                        self.note(&key, &v);
                        Ok(true)
                    }
                    _ => Ok(false),
                }
            }
            Payload::Cmp(l, op, r) => {
                let (Some(a), Some(b)) = (self.expr(l)?, self.expr(r)?) else {
                    return Ok(false);
                };
                Ok(op.holds(&a, &b))
            }
        }
    }
}

pub(crate) fn arith(a: &Value, op: ArithOp, b: &Value, span: &Span) -> Result<Value, EvalError> {
    let (Some(x), Some(y)) = (a.as_int(), b.as_int()) else {
        return Err(EvalError::NotInteger {
            expr: format!("{a}{}{b}", op.symbol()),
            span: span.clone(),
        });
    };
    let overflow = || EvalError::Overflow {
        expr: format!("{x}{}{y}", op.symbol()),
        span: span.clone(),
    };
    let n = match op {
        ArithOp::Add => x.checked_add(y).ok_or_else(overflow)?,
        ArithOp::Sub => x.checked_sub(y).ok_or_else(overflow)?,
        ArithOp::Mul => x.checked_mul(y).ok_or_else(overflow)?,
        ArithOp::Div => {
            if y == 0 {
                return Err(EvalError::DivisionByZero { span: span.clone() });
            }
            x.checked_div(y).ok_or_else(overflow)?
        }
    };
    Ok(Value::Int(n))
}

/// Evaluates a ground expression; `None` when some function is undefined.
pub fn evaluate(expr: &Expr, valuation: &Valuation) -> Result<Option<Value>, EvalError> {
    let env = Env::new();
    let span = Span::synthetic();
    Ctx {
        lookup: valuation,
        env: &env,
        span: &span,
        reads: None,
    }
    .expr(expr)
}

/// A rule instance whose body holds.
#[derive(Debug, Clone)]
pub(crate) struct Firing {
    /// `None` for constraints.
    pub assignment: Option<Assignment>,
    pub env: Env,
    pub reads: BTreeSet<Assignment>,
}

/// Tries a ground rule. Positive literals and the head are evaluated in
/// `pos`; `not` literals and aggregates in `neg`. Defaults are returned
/// without checking whether they are overridden.
pub(crate) fn fire(
    rule: &GroundRule,
    pos: &dyn Lookup,
    neg: &dyn Lookup,
    want_reads: bool,
) -> Result<Option<Firing>, EvalError> {
    let mut env = Env::new();
    let mut reads = BTreeSet::new();

    for (var, idx) in &rule.bindings {
        let Payload::Cmp(l, CmpOp::Eq, r) = &rule.body[*idx].payload else {
            unreachable!("binding equation is an equality");
        };
        let other = if l.as_var() == Some(var) && !env.contains_key(var) { r } else { l };
        let mut ctx = Ctx {
            lookup: pos,
            env: &env,
            span: &rule.span,
            reads: want_reads.then_some(&mut reads),
        };
        let Some(v) = ctx.expr(other)? else {
            return Ok(None);
        };
        env.insert(var.clone(), v);
    }

    for lit in &rule.body {
        if lit.negated {
            let mut ctx = Ctx {
                lookup: neg,
                env: &env,
                span: &rule.span,
                reads: None,
            };
            if ctx.payload(&lit.payload)? {
                return Ok(None);
            }
        } else {
            let mut ctx = Ctx {
                lookup: pos,
                env: &env,
                span: &rule.span,
                reads: want_reads.then_some(&mut reads),
            };
            if !ctx.payload(&lit.payload)? {
                return Ok(None);
            }
        }
    }

    let mut ctx = Ctx {
        lookup: pos,
        env: &env,
        span: &rule.span,
        reads: want_reads.then_some(&mut reads),
    };
    let assignment = match &rule.head {
        Head::Constraint => None,
        Head::Assert(t) | Head::Deny(t) => {
            let Some(key) = ctx.key(t)? else { return Ok(None) };
            Some(Assignment::new(key, Value::truth(matches!(rule.head, Head::Assert(_)))))
        }
        Head::Assign(t, e) | Head::Default(t, e) => {
            let Some(key) = ctx.key(t)? else { return Ok(None) };
            let Some(value) = ctx.expr(e)? else { return Ok(None) };
            Some(Assignment::new(key, value))
        }
        Head::Sum(t, agg) => {
            let Some(key) = ctx.key(t)? else { return Ok(None) };
            let total = sum(agg, neg, &env, &rule.span, want_reads.then_some(&mut reads))?;
            Some(Assignment::new(key, Value::Int(total)))
        }
    };
    Ok(Some(Firing {
        assignment,
        env,
        reads,
    }))
}

fn sum(
    agg: &SumAggregate,
    lookup: &dyn Lookup,
    env: &Env,
    span: &Span,
    mut reads: Option<&mut BTreeSet<Assignment>>,
) -> Result<i64, EvalError> {
    let mut seen = BTreeSet::new();
    let mut total: i64 = 0;
    for el in &agg.elements {
        let mut local = BTreeSet::new();
        let mut ctx = Ctx {
            lookup,
            env,
            span,
            reads: Some(&mut local),
        };
        let mut holds = true;
        for c in &el.conditions {
            let ok = ctx.payload(&c.payload)?;
            if ok == c.negated {
                holds = false;
                break;
            }
        }
        if !holds {
            continue;
        }
        let Some(key) = ctx.key(&el.template)? else { continue };
        let Some(value) = lookup.value(&key).cloned() else { continue };
        if !seen.insert(key.clone()) {
            continue;
        }
        let n = value.as_int().ok_or_else(|| EvalError::NotInteger {
            expr: format!("{key} = {value}"),
            span: span.clone(),
        })?;
        total = total.checked_add(n).ok_or_else(|| EvalError::Overflow {
            expr: format!("#sum at {key}"),
            span: span.clone(),
        })?;
        if let Some(r) = reads.as_deref_mut() {
            r.extend(local);
            r.insert(Assignment::new(key, value));
        }
    }
    Ok(total)
}

/// The label a rule instance carries once its solve-time variables are
/// known.
pub(crate) fn resolve_label(label: &Label, env: &Env) -> String {
    match label {
        Label::Text(t) => template::interpolate(t, |v| env.get(v).map(Value::raw_text), true),
        Label::Term(t) => {
            let bound = crate::ground::subst_term(t, env);
            term(&bound)
        }
    }
}
