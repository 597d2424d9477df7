//! Brute-force stable-model oracle for small programs.
//!
//! Programs use five unary functions of `a`: Boolean `p`, `q`, `r` and
//! integer `f`, `g` ranging over 1..=3, so there are exactly twelve
//! function/value atoms. The oracle translates a program into a normal
//! logic program over those atoms (assignments become plain rules, defaults
//! get `not` literals for every competing value, functionality becomes
//! integrity constraints) and checks every subset of atoms for stability.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;

pub const BOOLS: [&str; 3] = ["p", "q", "r"];
pub const INTS: [&str; 2] = ["f", "g"];
pub const INT_VALUES: [i64; 3] = [1, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Val {
    Bool(bool),
    Int(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyId(pub usize);

impl KeyId {
    pub fn name(self) -> &'static str {
        if self.0 < 3 {
            BOOLS[self.0]
        } else {
            INTS[self.0 - 3]
        }
    }

    pub fn is_bool(self) -> bool {
        self.0 < 3
    }

    pub fn domain(self) -> Vec<Val> {
        if self.is_bool() {
            vec![Val::Bool(true), Val::Bool(false)]
        } else {
            INT_VALUES.iter().map(|&n| Val::Int(n)).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    /// `p(a)`, `~p(a)` or `f(a) = v`.
    Is(KeyId, Val),
    /// `f(a) > n`
    Gt(KeyId, i64),
    /// `p(a) != v` / `f(a) != v`
    Ne(KeyId, Val),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lit {
    pub not: bool,
    pub cond: Cond,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeadKind {
    Strict(KeyId, Val),
    Default(KeyId, Val),
    Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRule {
    pub head: HeadKind,
    pub body: Vec<Lit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenProgram {
    pub rules: Vec<GenRule>,
}

fn val_text(v: Val) -> String {
    match v {
        Val::Bool(b) => b.to_string(),
        Val::Int(n) => n.to_string(),
    }
}

fn cond_text(c: &Cond) -> String {
    match c {
        Cond::Is(k, Val::Bool(true)) => format!("{}(a)", k.name()),
        Cond::Is(k, Val::Bool(false)) => format!("~{}(a)", k.name()),
        Cond::Is(k, v) => format!("{}(a) = {}", k.name(), val_text(*v)),
        Cond::Gt(k, n) => format!("{}(a) > {n}", k.name()),
        Cond::Ne(k, v) => format!("{}(a) != {}", k.name(), val_text(*v)),
    }
}

impl GenProgram {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let head = match &r.head {
                HeadKind::Strict(k, Val::Bool(true)) => format!("{}(a)", k.name()),
                HeadKind::Strict(k, Val::Bool(false)) => format!("~{}(a)", k.name()),
                HeadKind::Strict(k, v) => format!("{}(a) := {}", k.name(), val_text(*v)),
                HeadKind::Default(k, v) => format!("{}(a) ^= {}", k.name(), val_text(*v)),
                HeadKind::Constraint => String::new(),
            };
            let body: Vec<String> = r
                .body
                .iter()
                .map(|l| format!("{}{}", if l.not { "not " } else { "" }, cond_text(&l.cond)))
                .collect();
            if body.is_empty() {
                out.push_str(&format!("{head}.\n"));
            } else if head.is_empty() {
                out.push_str(&format!(":- {}.\n", body.join(", ")));
            } else {
                out.push_str(&format!("{head} :- {}.\n", body.join(", ")));
            }
        }
        out
    }
}

fn key_strategy() -> impl Strategy<Value = KeyId> {
    (0usize..5).prop_map(KeyId)
}

fn value_for(k: KeyId) -> BoxedStrategy<Val> {
    if k.is_bool() {
        any::<bool>().prop_map(Val::Bool).boxed()
    } else {
        prop::sample::select(INT_VALUES.to_vec()).prop_map(Val::Int).boxed()
    }
}

fn cond_strategy() -> impl Strategy<Value = Cond> {
    key_strategy().prop_flat_map(|k| {
        let is = value_for(k).prop_map(move |v| Cond::Is(k, v));
        let ne = value_for(k).prop_map(move |v| Cond::Ne(k, v));
        if k.is_bool() {
            prop_oneof![4 => is, 1 => ne].boxed()
        } else {
            let gt = (0i64..=3).prop_map(move |n| Cond::Gt(k, n));
            prop_oneof![3 => is, 1 => ne, 1 => gt].boxed()
        }
    })
}

fn lit_strategy() -> impl Strategy<Value = Lit> {
    (prop::bool::weighted(0.35), cond_strategy()).prop_map(|(not, cond)| Lit { not, cond })
}

fn head_strategy() -> impl Strategy<Value = HeadKind> {
    prop_oneof![
        6 => key_strategy().prop_flat_map(|k| value_for(k).prop_map(move |v| HeadKind::Strict(k, v))),
        3 => key_strategy().prop_flat_map(|k| value_for(k).prop_map(move |v| HeadKind::Default(k, v))),
        1 => Just(HeadKind::Constraint),
    ]
}

fn rule_strategy() -> impl Strategy<Value = GenRule> {
    (head_strategy(), prop::collection::vec(lit_strategy(), 0..=3)).prop_map(|(head, mut body)| {
        if head == HeadKind::Constraint && body.is_empty() {
            body.push(Lit {
                not: false,
                cond: Cond::Is(KeyId(0), Val::Bool(true)),
            });
        }
        GenRule { head, body }
    })
}

pub fn program_strategy() -> impl Strategy<Value = GenProgram> {
    prop::collection::vec(rule_strategy(), 1..=8).prop_map(|rules| GenProgram { rules })
}

// ---- the oracle ----

/// Atoms 0..6 are the Boolean keys (true, false); 6..12 the integer keys.
pub const ATOMS: usize = 12;

pub fn atom(k: KeyId, v: Val) -> usize {
    match v {
        Val::Bool(b) => k.0 * 2 + usize::from(!b),
        Val::Int(n) => 6 + (k.0 - 3) * 3 + (n as usize - 1),
    }
}

fn atom_text(i: usize) -> (String, String) {
    // (sort key, listing)
    if i < 6 {
        let k = KeyId(i / 2);
        let t = i.is_multiple_of(2);
        let listing = if t {
            format!("{}(a).", k.name())
        } else {
            format!("~{}(a).", k.name())
        };
        (k.name().to_string(), listing)
    } else {
        let k = KeyId(3 + (i - 6) / 3);
        let v = (i - 6) % 3 + 1;
        (k.name().to_string(), format!("{}(a)={v}.", k.name()))
    }
}

/// Values of the key that satisfy a condition.
fn satisfying(c: &Cond) -> (KeyId, Vec<Val>) {
    match c {
        Cond::Is(k, v) => (*k, vec![*v]),
        Cond::Gt(k, n) => (*k, k.domain().into_iter().filter(|v| matches!(v, Val::Int(m) if m > n)).collect()),
        Cond::Ne(k, v) => (*k, k.domain().into_iter().filter(|w| w != v).collect()),
    }
}

#[derive(Debug, Clone)]
struct Normal {
    head: Option<usize>,
    pos: Vec<usize>,
    neg: Vec<usize>,
}

fn translate(p: &GenProgram) -> Vec<Normal> {
    let mut out = Vec::new();
    for r in &p.rules {
        // Positive conditions are disjunctions over satisfying values:
        // expand into one rule per choice.
        let mut variants: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new())];
        for l in &r.body {
            let (k, vals) = satisfying(&l.cond);
            let atoms: Vec<usize> = vals.iter().map(|v| atom(k, *v)).collect();
            if l.not {
                for v in &mut variants {
                    v.1.extend(atoms.iter().copied());
                }
            } else {
                variants = variants
                    .into_iter()
                    .flat_map(|(pos, neg)| {
                        atoms.iter().map(move |a| {
                            let mut p = pos.clone();
                            p.push(*a);
                            (p, neg.clone())
                        })
                    })
                    .collect();
            }
        }
        for (pos, mut neg) in variants {
            let head = match &r.head {
                HeadKind::Strict(k, v) => Some(atom(*k, *v)),
                HeadKind::Default(k, v) => {
                    neg.extend(k.domain().into_iter().filter(|w| w != v).map(|w| atom(*k, w)));
                    Some(atom(*k, *v))
                }
                HeadKind::Constraint => None,
            };
            out.push(Normal { head, pos, neg });
        }
    }
    // Functionality.
    for k in 0..5 {
        let dom = KeyId(k).domain();
        for (i, a) in dom.iter().enumerate() {
            for b in &dom[i + 1..] {
                out.push(Normal {
                    head: None,
                    pos: vec![atom(KeyId(k), *a), atom(KeyId(k), *b)],
                    neg: Vec::new(),
                });
            }
        }
    }
    out
}

fn stable(rules: &[Normal], s: u32) -> bool {
    let has = |set: u32, a: usize| set & (1 << a) != 0;
    for r in rules.iter().filter(|r| r.head.is_none()) {
        if r.pos.iter().all(|&a| has(s, a)) && r.neg.iter().all(|&a| !has(s, a)) {
            return false;
        }
    }
    let reduct: Vec<&Normal> = rules
        .iter()
        .filter(|r| r.head.is_some() && r.neg.iter().all(|&a| !has(s, a)))
        .collect();
    let mut least = 0u32;
    loop {
        let mut next = least;
        for r in &reduct {
            if r.pos.iter().all(|&a| has(least, a)) {
                next |= 1 << r.head.unwrap();
            }
        }
        if next == least {
            break;
        }
        least = next;
    }
    least == s
}

/// Canonical texts of every stable model, sorted.
pub fn stable_models(p: &GenProgram) -> Vec<String> {
    let rules = translate(p);
    let mut out = BTreeSet::new();
    for s in 0..(1u32 << ATOMS) {
        if stable(&rules, s) {
            out.insert(model_text(s));
        }
    }
    out.into_iter().collect()
}

/// Listing of a set of atoms in canonical key order.
pub fn model_text(s: u32) -> String {
    let mut items: Vec<(String, String)> = (0..ATOMS)
        .filter(|a| s & (1 << a) != 0)
        .map(atom_text)
        .collect();
    items.sort();
    items
        .into_iter()
        .map(|(_, l)| l)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Outcome of comparing the solver against the oracle on one program.
pub fn discrepancy(p: &GenProgram) -> Option<String> {
    use lppf::ground::ground;
    use lppf::solve::{check_stable, solve, Valuation};
    use lppf::{Key, Value};

    let text = p.text();
    let program = match lppf::syntax::parse(&text, "gen") {
        Ok(pr) => pr,
        Err(e) => return Some(format!("parse failure {e:?} on\n{text}")),
    };
    let g = match ground(&program) {
        Ok(g) => g,
        Err(e) => return Some(format!("ground failure {e} on\n{text}")),
    };
    let expected = stable_models(p);
    let got: Vec<String> = match solve(&g) {
        Ok(r) => {
            let mut v: Vec<String> = r.answer_sets.iter().map(|a| a.valuation.text()).collect();
            v.sort();
            v
        }
        Err(_) => Vec::new(),
    };
    if got != expected {
        return Some(format!(
            "solve disagrees on\n{text}\nsolver: {got:?}\noracle: {expected:?}"
        ));
    }

    // check_stable over every functional candidate.
    let keys: Vec<KeyId> = (0..5).map(KeyId).collect();
    let mut accepted = BTreeSet::new();
    let mut cursor = vec![0usize; keys.len()];
    loop {
        let mut cand = Valuation::new();
        for (k, &c) in keys.iter().zip(&cursor) {
            if c > 0 {
                let v = match k.domain()[c - 1] {
                    Val::Bool(b) => Value::truth(b),
                    Val::Int(n) => Value::Int(n),
                };
                cand.insert(Key::new(k.name(), vec![Value::sym("a")]), v);
            }
        }
        if check_stable(&g, &cand) {
            accepted.insert(cand.text());
        }
        let mut i = keys.len();
        let mut done = true;
        while i > 0 {
            i -= 1;
            cursor[i] += 1;
            if cursor[i] <= keys[i].domain().len() {
                done = false;
                break;
            }
            cursor[i] = 0;
        }
        if done {
            break;
        }
    }
    let accepted: Vec<String> = accepted.into_iter().collect();
    if accepted != expected {
        return Some(format!(
            "check_stable disagrees on\n{text}\ncheck_stable: {accepted:?}\noracle: {expected:?}"
        ));
    }
    None
}
