//! Functional answer sets.
//!
//! A program is read through its relational translation: `f := v :- B`
//! derives `f = v` when `B` holds, a default `f ^= v :- B` does the same
//! unless `f` holds some other value, and every function keeps at most one
//! value. Stratified programs are evaluated level by level and have at most
//! one answer set; others are solved by checking every candidate valuation.

mod eval;
mod stable;
mod strata;

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ground::{GroundProgram, GroundRule};
use crate::syntax::{render_rule, Head, Span};
use crate::value::{Assignment, Key, Value};

pub use eval::evaluate;
pub use stable::check_stable;

pub(crate) use eval::{fire, resolve_label, Ctx, Env};

/// Candidate valuations examined for a non-stratified program.
pub const DEFAULT_MAX_CANDIDATES: u128 = 1 << 20;

/// A partial map from ground function terms to values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Valuation(BTreeMap<Key, Value>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &Key) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn insert(&mut self, key: Key, value: Value) -> Option<Value> {
        self.0.insert(key, value)
    }

    pub fn holds(&self, a: &Assignment) -> bool {
        self.0.get(&a.key) == Some(&a.value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &Value)> {
        self.0.iter()
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.0
            .iter()
            .map(|(k, v)| Assignment::new(k.clone(), v.clone()))
    }

    /// Canonical text: every assignment in listing form, in key order.
    pub fn text(&self) -> String {
        self.assignments()
            .map(|a| a.listing())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromIterator<(Key, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (Key, Value)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for a in self.assignments() {
            seq.serialize_element(&a)?;
        }
        seq.end()
    }
}

/// A rule instance that fires in an answer set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Support {
    /// Index into the ground program's rules.
    pub rule: usize,
    /// Index of the source rule.
    pub origin: usize,
    /// Resolved label text, if the rule is labeled.
    pub label: Option<String>,
    /// Values consulted by the body, the head arguments and the aggregate,
    /// in canonical order.
    pub reads: Vec<Assignment>,
    pub fact: bool,
    pub default: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub valuation: Valuation,
    /// Every support of every assigned key.
    pub supports: BTreeMap<Key, Vec<Support>>,
    /// Evaluation level at which each key got its value.
    pub levels: BTreeMap<Key, usize>,
}

impl AnswerSet {
    /// Assignments established by some rule with a body, in evaluation
    /// order (level, then canonical key order).
    pub fn derived(&self) -> Vec<Assignment> {
        let mut keys: Vec<(&usize, &Key)> = self
            .supports
            .iter()
            .filter(|(_, ss)| ss.iter().any(|s| !s.fact))
            .map(|(k, _)| (self.levels.get(k).unwrap_or(&0), k))
            .collect();
        keys.sort();
        keys.into_iter()
            .filter_map(|(_, k)| {
                self.valuation
                    .get(k)
                    .map(|v| Assignment::new(k.clone(), v.clone()))
            })
            .collect()
    }

    pub fn supports_of(&self, key: &Key) -> &[Support] {
        self.supports.get(key).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub answer_sets: Vec<AnswerSet>,
    pub stratified: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{span}: division by zero")]
    DivisionByZero { span: Span },
    #[error("{span}: arithmetic on a non-integer in `{expr}`")]
    NotInteger { expr: String, span: Span },
    #[error("{span}: integer overflow in `{expr}`")]
    Overflow { expr: String, span: Span },
}

/// How a conflicting value was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub value: Value,
    pub rule: String,
    pub span: Span,
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} from `{}` ({})", self.value, self.rule, self.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("inconsistent values for {key}: {first}; {second}")]
    Inconsistency {
        key: Key,
        first: Box<Derivation>,
        second: Box<Derivation>,
    },
    #[error("{key} is derived both true and false: {first}; {second}")]
    ExplicitContradiction {
        key: Key,
        first: Box<Derivation>,
        second: Box<Derivation>,
    },
    #[error("{span}: integrity constraint violated: `{rule}`")]
    ConstraintViolation { rule: String, span: Span },
    #[error("program is not stratified and needs {candidates} candidate valuations (limit {limit})")]
    NonStratifiedOverflow { candidates: u128, limit: u128 },
    #[error("{span}: aggregate in a program that is not stratified: `{rule}`")]
    UnstratifiedAggregate { rule: String, span: Span },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_candidates: u128,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

pub fn solve(ground: &GroundProgram) -> Result<SolveResult, SolveError> {
    solve_with(ground, &SolveOptions::default())
}

pub fn solve_with(ground: &GroundProgram, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    match strata::stratify(&ground.rules) {
        Ok(s) => {
            let answer = stratified(&ground.rules, &s)?;
            Ok(SolveResult {
                answer_sets: vec![answer],
                stratified: true,
                diagnostics: Vec::new(),
            })
        }
        Err(cycle) => {
            if let Some(r) = ground
                .rules
                .iter()
                .find(|r| matches!(r.head, Head::Sum(..)))
            {
                return Err(SolveError::UnstratifiedAggregate {
                    rule: render_rule(&r.to_rule()),
                    span: r.span.clone(),
                });
            }
            let models = stable::enumerate(&ground.rules, opts.max_candidates)?;
            let mut answer_sets = Vec::with_capacity(models.len());
            for m in models {
                let supports = supports(&ground.rules, &m)?;
                let levels = m.iter().map(|(k, _)| (k.clone(), 0)).collect();
                answer_sets.push(AnswerSet {
                    valuation: m,
                    supports,
                    levels,
                });
            }
            Ok(SolveResult {
                answer_sets,
                stratified: false,
                diagnostics: vec![format!(
                    "not stratified (negative cycle through {}); answer sets enumerated",
                    cycle.nodes.join(", ")
                )],
            })
        }
    }
}

fn derivation(rule: &GroundRule, value: &Value) -> Derivation {
    Derivation {
        value: value.clone(),
        rule: render_rule(&rule.to_rule()),
        span: rule.span.clone(),
    }
}

fn stratified(rules: &[GroundRule], strata: &strata::Strata) -> Result<AnswerSet, SolveError> {
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); strata.levels];
    for (i, lv) in strata.rule_levels.iter().enumerate() {
        if let Some(lv) = lv {
            by_level[*lv].push(i);
        }
    }

    let mut val: BTreeMap<Key, Value> = BTreeMap::new();
    let mut first: BTreeMap<Key, usize> = BTreeMap::new();
    let mut levels: BTreeMap<Key, usize> = BTreeMap::new();
    for (lv, members) in by_level.iter().enumerate() {
        loop {
            let mut changed = false;
            for &ri in members {
                let r = &rules[ri];
                let Some(f) = fire(r, &val, &val, false)? else { continue };
                let a = f.assignment.expect("rule with a head");
                match val.get(&a.key) {
                    Some(w) if *w == a.value => {}
                    Some(_) if r.is_default() => {}
                    Some(w) => {
                        let prior = &rules[first[&a.key]];
                        let first_d = derivation(prior, w);
                        let second_d = derivation(r, &a.value);
                        let boolean = w.as_bool().is_some() && a.value.as_bool().is_some();
                        let (first_d, second_d) = (Box::new(first_d), Box::new(second_d));
                        return Err(if boolean {
                            SolveError::ExplicitContradiction {
                                key: a.key,
                                first: first_d,
                                second: second_d,
                            }
                        } else {
                            SolveError::Inconsistency {
                                key: a.key,
                                first: first_d,
                                second: second_d,
                            }
                        });
                    }
                    None => {
                        first.insert(a.key.clone(), ri);
                        levels.insert(a.key.clone(), lv);
                        val.insert(a.key, a.value);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    for r in rules.iter().filter(|r| matches!(r.head, Head::Constraint)) {
        if fire(r, &val, &val, false)?.is_some() {
            return Err(SolveError::ConstraintViolation {
                rule: render_rule(&r.to_rule()),
                span: r.span.clone(),
            });
        }
    }

    let valuation = Valuation(val);
    let supports = supports(rules, &valuation)?;
    Ok(AnswerSet {
        valuation,
        supports,
        levels,
    })
}

/// Every rule instance that fires in `model` and yields a value the model
/// holds.
fn supports(rules: &[GroundRule], model: &Valuation) -> Result<BTreeMap<Key, Vec<Support>>, SolveError> {
    let mut out: BTreeMap<Key, Vec<Support>> = BTreeMap::new();
    for (i, r) in rules.iter().enumerate() {
        if matches!(r.head, Head::Constraint) {
            continue;
        }
        let Some(f) = fire(r, model, model, true)? else { continue };
        let a = f.assignment.expect("rule with a head");
        if !model.holds(&a) {
            continue;
        }
        let support = Support {
            rule: i,
            origin: r.origin,
            label: r.label.as_ref().map(|l| resolve_label(l, &f.env)),
            reads: f.reads.into_iter().collect(),
            fact: r.is_fact(),
            default: r.is_default(),
        };
        let entry = out.entry(a.key).or_default();
        if !entry.contains(&support) {
            entry.push(support);
        }
    }
    Ok(out)
}

/// The answer sets in listing form: `Answer:N` followed by the derived
/// assignments.
pub fn render_answers(result: &SolveResult) -> String {
    let mut out = String::new();
    for (i, a) in result.answer_sets.iter().enumerate() {
        out.push_str(&format!("Answer:{}\n", i + 1));
        for asg in a.derived() {
            out.push_str(&asg.listing());
            out.push('\n');
        }
    }
    out
}

/// `1 solution` / `N solutions`.
pub fn solution_count(n: usize) -> String {
    if n == 1 {
        "1 solution".to_string()
    } else {
        format!("{n} solutions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground;
    use crate::syntax::parse;

    pub(crate) const PUNISH: &str = "
punish(P) :- drive(P), alcohol(P)>50.
punish(P) :- resist(P).
sentence(P) ^= innocent :- person(P).
sentence(P) := prison :- punish(P).
person(gabriel).        person(clare).
drive(gabriel).         drive(clare).
alcohol(gabriel):=60.   alcohol(clare):=0.
resist(gabriel).        ~resist(clare).
";

    fn run(src: &str) -> Result<SolveResult, SolveError> {
        solve(&ground(&parse(src, "t").unwrap()).unwrap())
    }

    #[test]
    fn punish_program_listing() {
        let r = run(PUNISH).unwrap();
        assert_eq!(
            render_answers(&r),
            "Answer:1\npunish(gabriel).\nsentence(gabriel)=prison.\nsentence(clare)=innocent.\n"
        );
        assert!(r.stratified);
    }

    #[test]
    fn empty_program_has_one_empty_answer() {
        let r = run("").unwrap();
        assert_eq!(r.answer_sets.len(), 1);
        assert!(r.answer_sets[0].valuation.is_empty());
    }

    #[test]
    fn even_loop_has_two_answers() {
        let r = run("a :- not b. b :- not a.").unwrap();
        let texts: Vec<String> = r.answer_sets.iter().map(|a| a.valuation.text()).collect();
        assert_eq!(texts, vec!["a.", "b."]);
        assert!(!r.stratified);
    }

    #[test]
    fn conflicting_facts_cite_both_rules() {
        let err = run("f(1):=2. f(1):=3.").unwrap_err();
        let SolveError::Inconsistency { first, second, .. } = &err else {
            panic!("{err}");
        };
        assert_eq!(first.rule, "f(1):=2.");
        assert_eq!(second.rule, "f(1):=3.");
    }

    #[test]
    fn explicit_contradiction() {
        assert!(matches!(
            run("p(a). ~p(a)."),
            Err(SolveError::ExplicitContradiction { .. })
        ));
    }

    #[test]
    fn constraint_violation_names_the_constraint() {
        let err = run("p(a). :- p(a).").unwrap_err();
        assert_eq!(
            err,
            SolveError::ConstraintViolation {
                rule: ":- p(a).".into(),
                span: Span::new("t", 1, 7)
            }
        );
    }

    #[test]
    fn supports_list_every_firing_rule() {
        let r = run(PUNISH).unwrap();
        let a = &r.answer_sets[0];
        let punish = Key::new("punish", vec![Value::sym("gabriel")]);
        let reads: Vec<Vec<String>> = a
            .supports_of(&punish)
            .iter()
            .map(|s| s.reads.iter().map(|x| x.to_string()).collect())
            .collect();
        assert_eq!(
            reads,
            vec![
                vec!["alcohol(gabriel) = 60".to_string(), "drive(gabriel)".to_string()],
                vec!["resist(gabriel)".to_string()],
            ]
        );
    }

    #[test]
    fn value_bound_variables_reach_labels() {
        let r = run("s(a) := 4. \"score %S\" :: t(X) := S :- s(X) = S, S != 0.").unwrap();
        let t = Key::new("t", vec![Value::sym("a")]);
        let s = &r.answer_sets[0].supports_of(&t)[0];
        assert_eq!(s.label.as_deref(), Some("score 4"));
        assert_eq!(r.answer_sets[0].valuation.get(&t), Some(&Value::Int(4)));
    }

    #[test]
    fn sum_with_zero_defaults() {
        let r = run(
            "c(x). c(y). c(z). v(x) := 3. v(C) ^= 0 :- c(C).\nt := #sum{ v(C) : c(C) }.",
        )
        .unwrap();
        let t = Key::new("t", vec![]);
        assert_eq!(r.answer_sets[0].valuation.get(&t), Some(&Value::Int(3)));
    }

    #[test]
    fn aggregates_need_stratification() {
        assert!(matches!(
            run("a :- not b. b :- not a. t := #sum{ v : a }."),
            Err(SolveError::UnstratifiedAggregate { .. })
        ));
    }

    #[test]
    fn odd_loop_has_no_answer() {
        let r = run("a :- not a.").unwrap();
        assert!(r.answer_sets.is_empty());
    }
}
