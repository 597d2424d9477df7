//! Stable-model check and exhaustive enumeration for programs that cannot
//! be stratified.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use crate::ground::{GroundProgram, GroundRule};
use crate::syntax::*;
use crate::value::{Key, Value};

use super::eval::{arith, fire};
use super::{EvalError, SolveError, Valuation};

/// Whether `candidate` is a stable model of `ground`: every integrity
/// constraint holds in it and it is the least model of its reduct. The
/// reduct drops rules with a `not` literal that holds in the candidate and
/// defaults whose key the candidate gives another value; aggregates are
/// read in the candidate.
pub fn check_stable(ground: &GroundProgram, candidate: &Valuation) -> bool {
    is_stable(&ground.rules, candidate).unwrap_or(false)
}

pub(crate) fn is_stable(rules: &[GroundRule], m: &Valuation) -> Result<bool, EvalError> {
    for r in rules.iter().filter(|r| matches!(r.head, Head::Constraint)) {
        if fire(r, m, m, false)?.is_some() {
            return Ok(false);
        }
    }
    let mut least: BTreeMap<Key, Value> = BTreeMap::new();
    loop {
        let mut changed = false;
        for r in rules {
            if matches!(r.head, Head::Constraint) {
                continue;
            }
            let Some(f) = fire(r, &least, m, false)? else { continue };
            let a = f.assignment.expect("rule with a head");
            if r.is_default() && m.get(&a.key).is_some_and(|w| *w != a.value) {
                continue;
            }
            if !m.holds(&a) {
                return Ok(false);
            }
            if let Entry::Vacant(e) = least.entry(a.key) {
                e.insert(a.value);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(least.len() == m.len())
}

/// Stable models in canonical text order.
pub(crate) fn enumerate(rules: &[GroundRule], limit: u128) -> Result<Vec<Valuation>, SolveError> {
    let possible = possible_values(rules, limit)?;
    let options: Vec<(&Key, Vec<Option<&Value>>)> = possible
        .iter()
        .map(|(k, vs)| {
            let mut o = vec![None];
            o.extend(vs.iter().map(Some));
            (k, o)
        })
        .collect();

    let mut models = Vec::new();
    let mut cursor = vec![0usize; options.len()];
    loop {
        let candidate: Valuation = options
            .iter()
            .zip(&cursor)
            .filter_map(|((k, o), &i)| o[i].map(|v| ((*k).clone(), v.clone())))
            .collect();
        if is_stable(rules, &candidate)? {
            models.push(candidate);
        }
        let mut k = options.len();
        let mut done = true;
        while k > 0 {
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < options[k].1.len() {
                done = false;
                break;
            }
            cursor[k] = 0;
        }
        if done {
            break;
        }
    }
    models.sort_by_cached_key(Valuation::text);
    Ok(models)
}

fn candidate_count(possible: &BTreeMap<Key, BTreeSet<Value>>) -> u128 {
    possible
        .values()
        .fold(1u128, |acc, vs| acc.saturating_mul(vs.len() as u128 + 1))
}

type Possible = BTreeMap<Key, BTreeSet<Value>>;
type SetEnv = BTreeMap<String, BTreeSet<Value>>;

/// Over-approximates the values each key can take in any stable model by
/// ignoring `not` and evaluating bodies over sets of values.
fn possible_values(rules: &[GroundRule], limit: u128) -> Result<Possible, SolveError> {
    let mut possible = Possible::new();
    loop {
        let mut changed = false;
        for r in rules {
            let Some(target) = r.head.target() else { continue };
            let mut env = SetEnv::new();
            let mut blocked = false;
            for (var, idx) in &r.bindings {
                let Payload::Cmp(l, CmpOp::Eq, rhs) = &r.body[*idx].payload else {
                    unreachable!("binding equation is an equality");
                };
                let other = if l.as_var() == Some(var) { rhs } else { l };
                let vs = expr_set(other, &possible, &env);
                if vs.is_empty() {
                    blocked = true;
                    break;
                }
                env.insert(var.clone(), vs);
            }
            if blocked
                || r
                    .body
                    .iter()
                    .filter(|l| !l.negated)
                    .any(|l| !may_hold(&l.payload, &possible, &env))
            {
                continue;
            }
            let keys = key_set(target, &possible, &env);
            let values: BTreeSet<Value> = match &r.head {
                Head::Assert(_) => [Value::truth(true)].into(),
                Head::Deny(_) => [Value::truth(false)].into(),
                Head::Assign(_, e) | Head::Default(_, e) => expr_set(e, &possible, &env),
                Head::Sum(..) | Head::Constraint => continue,
            };
            for k in keys {
                let slot = possible.entry(k).or_default();
                for v in &values {
                    changed |= slot.insert(v.clone());
                }
            }
        }
        let candidates = candidate_count(&possible);
        if candidates > limit {
            return Err(SolveError::NonStratifiedOverflow { candidates, limit });
        }
        if !changed {
            return Ok(possible);
        }
    }
}

fn term_set(t: &Term, possible: &Possible, env: &SetEnv) -> BTreeSet<Value> {
    match t {
        Term::Var(v) => env.get(v).cloned().unwrap_or_default(),
        Term::Func(f) => key_set(f, possible, env)
            .into_iter()
            .filter_map(|k| possible.get(&k))
            .flatten()
            .cloned()
            .collect(),
        other => other.as_value().into_iter().collect(),
    }
}

fn key_set(f: &FuncTerm, possible: &Possible, env: &SetEnv) -> Vec<Key> {
    let mut keys = vec![Vec::new()];
    for a in &f.args {
        let vs = term_set(a, possible, env);
        keys = keys
            .into_iter()
            .flat_map(|prefix| {
                vs.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    keys.into_iter()
        .map(|args| Key::new(f.functor.clone(), args))
        .collect()
}

fn expr_set(e: &Expr, possible: &Possible, env: &SetEnv) -> BTreeSet<Value> {
    match e {
        Expr::Term(t) => term_set(t, possible, env),
        Expr::Binary(l, op, r) => {
            let (ls, rs) = (expr_set(l, possible, env), expr_set(r, possible, env));
            let span = Span::synthetic();
            let mut out = BTreeSet::new();
            for a in &ls {
                for b in &rs {
                    if let Ok(v) = arith(a, *op, b, &span) {
                        out.insert(v);
                    }
                }
            }
            out
        }
    }
}

fn may_hold(p: &Payload, possible: &Possible, env: &SetEnv) -> bool {
    match p {
        Payload::Atom(f) | Payload::NegAtom(f) => {
            let want = Value::truth(matches!(p, Payload::Atom(_)));
            key_set(f, possible, env)
                .iter()
                .any(|k| possible.get(k).is_some_and(|vs| vs.contains(&want)))
        }
        Payload::Cmp(l, op, r) => {
            let (ls, rs) = (expr_set(l, possible, env), expr_set(r, possible, env));
            ls.iter().any(|a| rs.iter().any(|b| op.holds(a, b)))
        }
    }
}
