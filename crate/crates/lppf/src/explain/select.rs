//! Choosing which assignments to explain from `#explain` directives.

use std::collections::{BTreeMap, BTreeSet};

use crate::ground::{match_pattern, subst_literal};
use crate::solve::{AnswerSet, Ctx, Env};
use crate::syntax::safety::analyze_body;
use crate::syntax::*;
use crate::value::{Assignment, Value};

/// Assignments selected by the directives, deduplicated, in canonical order.
/// Without directives every derived assignment is selected, in answer order.
pub fn select_targets(directives: &[Directive], answer: &AnswerSet) -> Vec<Assignment> {
    let explains: Vec<(&FuncTerm, &[Literal])> = directives
        .iter()
        .filter_map(|d| match d {
            Directive::Explain { target, conditions } => Some((target, conditions.as_slice())),
            Directive::Label { .. } => None,
        })
        .collect();
    if explains.is_empty() {
        return answer.derived();
    }

    let constants: Vec<Value> = answer
        .valuation
        .iter()
        .flat_map(|(k, v)| k.args.iter().chain(std::iter::once(v)))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut out = BTreeSet::new();
    for (target, conditions) in explains {
        for asg in answer.valuation.assignments() {
            let Some(sigma) = match_target(target, &asg) else { continue };
            if satisfied(conditions, &sigma, answer, &constants) {
                out.insert(asg);
            }
        }
    }
    out.into_iter().collect()
}

fn match_target(target: &FuncTerm, asg: &Assignment) -> Option<BTreeMap<String, Value>> {
    let ground = FuncTerm::new(
        asg.key.functor.clone(),
        asg.key.args.iter().cloned().map(Term::from).collect(),
    );
    match_pattern(target, &ground)
}

/// Whether some extension of `sigma` makes every condition hold.
fn satisfied(
    conditions: &[Literal],
    sigma: &BTreeMap<String, Value>,
    answer: &AnswerSet,
    constants: &[Value],
) -> bool {
    let body: Vec<Literal> = conditions.iter().map(|l| subst_literal(l, sigma)).collect();
    let bindings = analyze_body(&body, &BTreeSet::new());
    let free: Vec<&String> = bindings.positional.iter().collect();
    let mut cursor = vec![0usize; free.len()];
    if !free.is_empty() && constants.is_empty() {
        return false;
    }
    loop {
        let extra: BTreeMap<String, Value> = free
            .iter()
            .zip(&cursor)
            .map(|(v, &i)| ((*v).clone(), constants[i].clone()))
            .collect();
        let lits: Vec<Literal> = body.iter().map(|l| subst_literal(l, &extra)).collect();
        if holds(&lits, &bindings.by_value, answer) {
            return true;
        }
        let mut k = free.len();
        let mut done = true;
        while k > 0 {
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < constants.len() {
                done = false;
                break;
            }
            cursor[k] = 0;
        }
        if done {
            return false;
        }
    }
}

fn holds(body: &[Literal], by_value: &[(String, usize)], answer: &AnswerSet) -> bool {
    let span = Span::synthetic();
    let mut env = Env::new();
    for (var, idx) in by_value {
        let Payload::Cmp(l, CmpOp::Eq, r) = &body[*idx].payload else {
            return false;
        };
        let other = if l.as_var() == Some(var) { r } else { l };
        let mut ctx = Ctx {
            lookup: &answer.valuation,
            env: &env,
            span: &span,
            reads: None,
        };
        match ctx.expr(other) {
            Ok(Some(v)) => {
                env.insert(var.clone(), v);
            }
            _ => return false,
        }
    }
    body.iter().all(|l| {
        let mut ctx = Ctx {
            lookup: &answer.valuation,
            env: &env,
            span: &span,
            reads: None,
        };
        ctx.payload(&l.payload).is_ok_and(|h| h != l.negated)
    })
}
