//! Canonical text form of programs: one statement per line, labels as a
//! `"text" :: ` prefix. Facts use the compact `f(a):=v.` form; rules with a
//! body space their assignment operator.

use super::ast::*;
use crate::value::escape_string;

pub fn render(program: &Program) -> String {
    let mut out = String::new();
    for r in &program.rules {
        out.push_str(&render_rule(r));
        out.push('\n');
    }
    for d in &program.directives {
        out.push_str(&render_directive(d));
        out.push('\n');
    }
    out
}

pub fn render_rule(rule: &Rule) -> String {
    let mut out = String::new();
    match &rule.label {
        Some(Label::Text(t)) => {
            out.push('"');
            out.push_str(&escape_string(t));
            out.push_str("\" :: ");
        }
        Some(Label::Term(t)) => {
            out.push_str(&term(t));
            out.push_str(" :: ");
        }
        None => {}
    }
    let compact = rule.body.is_empty();
    match &rule.head {
        Head::Constraint => {
            out.push_str(":- ");
            out.push_str(&literals(&rule.body));
            out.push('.');
            return out;
        }
        Head::Assert(t) => out.push_str(&atom(t)),
        Head::Deny(t) => {
            out.push('~');
            out.push_str(&atom(t));
        }
        Head::Assign(t, e) => {
            out.push_str(&atom(t));
            out.push_str(if compact { ":=" } else { " := " });
            out.push_str(&expr(e));
        }
        Head::Default(t, e) => {
            out.push_str(&atom(t));
            out.push_str(" ^= ");
            out.push_str(&expr(e));
        }
        Head::Sum(t, agg) => {
            out.push_str(&atom(t));
            out.push_str(" := ");
            out.push_str(&aggregate(agg));
        }
    }
    if !rule.body.is_empty() {
        out.push_str(" :- ");
        out.push_str(&literals(&rule.body));
    }
    out.push('.');
    out
}

pub fn render_directive(d: &Directive) -> String {
    match d {
        Directive::Label { label, pattern } => {
            format!("#label {} :: {}.", term(label), atom(pattern))
        }
        Directive::Explain { target, conditions } if conditions.is_empty() => {
            format!("#explain {}.", atom(target))
        }
        Directive::Explain { target, conditions } => {
            format!("#explain {} :- {}.", atom(target), literals(conditions))
        }
    }
}

pub(crate) fn aggregate(agg: &SumAggregate) -> String {
    if agg.elements.is_empty() {
        return "#sum{ }".to_string();
    }
    let elements: Vec<String> = agg
        .elements
        .iter()
        .map(|el| {
            if el.conditions.is_empty() {
                atom(&el.template)
            } else {
                format!("{} : {}", atom(&el.template), literals(&el.conditions))
            }
        })
        .collect();
    format!("#sum{{ {} }}", elements.join("; "))
}

pub fn literals(lits: &[Literal]) -> String {
    lits.iter().map(literal).collect::<Vec<_>>().join(", ")
}

pub fn literal(l: &Literal) -> String {
    let body = match &l.payload {
        Payload::Atom(f) => atom(f),
        Payload::NegAtom(f) => format!("~{}", atom(f)),
        Payload::Cmp(lhs, op, rhs) => format!("{}{}{}", expr(lhs), op.symbol(), expr(rhs)),
    };
    if l.negated {
        format!("not {body}")
    } else {
        body
    }
}

/// A function term in atom or head position, where `f` alone already means
/// the 0-ary function.
pub fn atom(f: &FuncTerm) -> String {
    if f.args.is_empty() {
        f.functor.clone()
    } else {
        func(f)
    }
}

fn func(f: &FuncTerm) -> String {
    let args: Vec<String> = f.args.iter().map(term).collect();
    format!("{}({})", f.functor, args.join(", "))
}

/// A term in argument or expression position; 0-ary function terms keep
/// their parentheses so they are not read back as symbols.
pub fn term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        Term::Int(n) => n.to_string(),
        Term::Sym(s) => s.clone(),
        Term::Str(s) => format!("\"{}\"", escape_string(s)),
        Term::Func(f) => func(f),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Term(t) => term(t),
        Expr::Binary(l, op, r) => {
            let left = match l.as_ref() {
                Expr::Binary(_, lop, _) if lop.precedence() < op.precedence() => {
                    format!("({})", expr(l))
                }
                _ => expr(l),
            };
            let right = match r.as_ref() {
                Expr::Binary(_, rop, _) if rop.precedence() <= op.precedence() => {
                    format!("({})", expr(r))
                }
                _ => expr(r),
            };
            format!("{left}{}{right}", op.symbol())
        }
    }
}
