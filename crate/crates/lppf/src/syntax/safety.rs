//! Variable safety.
//!
//! A variable is bound when it appears as an argument of a function term in
//! a body literal that is not under `not` (atoms, `~` atoms and comparison
//! operands alike). A variable that is still unbound may be bound by value
//! through an equation `V = expr` (or `expr = V`) whose other side only uses
//! bound variables; such variables get their value while solving.

use std::collections::BTreeSet;

use super::ast::{AggElement, CmpOp, Directive, Head, Label, Literal, Payload, Rule, Term};
use super::template;

/// How each body variable becomes bound.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    /// Variables bound through function-term arguments (ground at grounding).
    pub positional: BTreeSet<String>,
    /// Variables bound by value: `(name, index of the binding equation)`, in
    /// dependency order.
    pub by_value: Vec<(String, usize)>,
}

impl Bindings {
    pub fn is_bound(&self, v: &str) -> bool {
        self.positional.contains(v) || self.by_value.iter().any(|(n, _)| n == v)
    }

    pub fn value_var_names(&self) -> BTreeSet<String> {
        self.by_value.iter().map(|(n, _)| n.clone()).collect()
    }
}

pub(crate) fn positional_vars(payload: &Payload, out: &mut BTreeSet<String>) {
    payload.walk_funcs(&mut |f| {
        for a in &f.args {
            if let Term::Var(v) = a {
                out.insert(v.clone());
            }
        }
    });
}

pub fn analyze_body(body: &[Literal], pre_bound: &BTreeSet<String>) -> Bindings {
    let mut positional = pre_bound.clone();
    for lit in body.iter().filter(|l| !l.negated) {
        positional_vars(&lit.payload, &mut positional);
    }
    let mut by_value: Vec<(String, usize)> = Vec::new();
    loop {
        let mut progressed = false;
        for (i, lit) in body.iter().enumerate() {
            if lit.negated {
                continue;
            }
            let Payload::Cmp(lhs, CmpOp::Eq, rhs) = &lit.payload else {
                continue;
            };
            for (var_side, other) in [(lhs, rhs), (rhs, lhs)] {
                let Some(v) = var_side.as_var() else { continue };
                let bound = |n: &str| positional.contains(n) || by_value.iter().any(|(b, _)| b == n);
                if bound(v) {
                    continue;
                }
                let mut needed = BTreeSet::new();
                other.collect_vars(&mut needed);
                if needed.iter().all(|n| bound(n)) {
                    by_value.push((v.to_string(), i));
                    progressed = true;
                    break;
                }
            }
        }
        if !progressed {
            break;
        }
    }
    Bindings {
        positional,
        by_value,
    }
}

/// Variables in argument positions of an aggregate element's template or of
/// its positive conditions.
pub fn element_positional_vars(el: &AggElement) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    el.template.walk_funcs(&mut |f| {
        for a in &f.args {
            if let Term::Var(v) = a {
                out.insert(v.clone());
            }
        }
    });
    for c in el.conditions.iter().filter(|c| !c.negated) {
        positional_vars(&c.payload, &mut out);
    }
    out
}

/// Returns the first unsafe variable of a rule, if any.
pub fn unsafe_variable(rule: &Rule) -> Option<String> {
    let b = analyze_body(&rule.body, &BTreeSet::new());
    let mut required = BTreeSet::new();
    match &rule.head {
        Head::Assert(t) | Head::Deny(t) => t.collect_vars(&mut required),
        Head::Assign(t, e) | Head::Default(t, e) => {
            t.collect_vars(&mut required);
            e.collect_vars(&mut required);
        }
        Head::Sum(t, agg) => {
            t.collect_vars(&mut required);
            // Variables not bound by the body are local to their element and
            // must be bound inside it.
            for el in &agg.elements {
                let local_bound = element_positional_vars(el);
                let mut el_vars = BTreeSet::new();
                el.template.collect_vars(&mut el_vars);
                for c in &el.conditions {
                    c.payload.collect_vars(&mut el_vars);
                }
                if let Some(v) = el_vars
                    .into_iter()
                    .find(|v| !b.is_bound(v) && !local_bound.contains(v))
                {
                    return Some(v);
                }
            }
        }
        Head::Constraint => {}
    }
    for l in &rule.body {
        l.payload.collect_vars(&mut required);
    }
    if let Some(Label::Text(t)) = &rule.label {
        required.extend(template::placeholders(t));
    }
    if let Some(Label::Term(t)) = &rule.label {
        t.collect_vars(&mut required);
    }
    required.into_iter().find(|v| !b.is_bound(v))
}

pub fn unsafe_directive_variable(d: &Directive) -> Option<String> {
    match d {
        Directive::Label { label, pattern } => {
            let mut have = BTreeSet::new();
            pattern.collect_vars(&mut have);
            let mut need = BTreeSet::new();
            label.collect_vars(&mut need);
            need.into_iter().find(|v| !have.contains(v))
        }
        Directive::Explain { target, conditions } => {
            let mut pre = BTreeSet::new();
            target.collect_vars(&mut pre);
            let b = analyze_body(conditions, &pre);
            let mut need = BTreeSet::new();
            for c in conditions {
                c.payload.collect_vars(&mut need);
            }
            need.into_iter().find(|v| !b.is_bound(v))
        }
    }
}
