//! Properties of the solver and explainer over random small programs.

mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use lppf::explain::{self, ExplanationNode, Mode};
use lppf::ground::{ground, GroundProgram};
use lppf::solve::{solve, AnswerSet, SolveResult};
use lppf::syntax::{parse, Expr, Head};
use lppf::Value;
use support::oracle::{program_strategy, GenProgram, GenRule, HeadKind, KeyId};

fn run(text: &str) -> (GroundProgram, Option<SolveResult>) {
    let g = ground(&parse(text, "gen").unwrap()).unwrap();
    let r = solve(&g).ok();
    (g, r)
}

/// Constant value a ground head assigns, when it is a literal constant.
fn head_value(head: &Head) -> Option<Value> {
    match head {
        Head::Assert(_) => Some(Value::truth(true)),
        Head::Deny(_) => Some(Value::truth(false)),
        Head::Assign(_, Expr::Term(t)) | Head::Default(_, Expr::Term(t)) => t.as_value(),
        _ => None,
    }
}

fn labeled_text(p: &GenProgram, mask: &[bool]) -> String {
    p.text()
        .lines()
        .zip(mask.iter().chain(std::iter::repeat(&false)))
        .enumerate()
        .map(|(i, (line, &on))| {
            if on && !line.starts_with(":-") {
                format!("\"L{i}\" :: {line}\n")
            } else {
                format!("{line}\n")
            }
        })
        .collect()
}

fn labels_in(n: &ExplanationNode, out: &mut Vec<String>) {
    if let Some(l) = n.label() {
        out.push(l.to_string());
    }
    n.children.iter().for_each(|c| labels_in(c, out));
}

fn displayed_labels(n: &ExplanationNode, out: &mut Vec<String>) {
    if n.labeled {
        out.push(n.display.clone());
    }
    n.children.iter().for_each(|c| displayed_labels(c, out));
}

fn leaves_ok(n: &ExplanationNode, answer: &AnswerSet) -> bool {
    if n.children.is_empty() {
        answer
            .supports_of(&n.atom.key)
            .iter()
            .any(|s| s.rule == n.rule && (s.fact || s.reads.is_empty()))
    } else {
        n.children.iter().all(|c| leaves_ok(c, answer))
    }
}

fn edges_ok(n: &ExplanationNode, answer: &AnswerSet) -> bool {
    let support = answer
        .supports_of(&n.atom.key)
        .iter()
        .find(|s| s.rule == n.rule);
    let Some(s) = support else { return false };
    n.children.iter().all(|c| s.reads.contains(&c.atom) && answer.valuation.holds(&c.atom))
        && n.children.iter().all(|c| edges_ok(c, answer))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn supports_agree_with_the_valuation(p in program_strategy()) {
        let (g, r) = run(&p.text());
        let Some(r) = r else { return Ok(()) };
        for a in &r.answer_sets {
            for (key, supports) in &a.supports {
                let value = a.valuation.get(key).expect("supported key is assigned");
                for s in supports {
                    let rule = &g.rules[s.rule];
                    let target = rule.head.target().expect("supports come from rules with heads");
                    prop_assert_eq!(target.functor.as_str(), key.functor.as_str());
                    if let Some(v) = head_value(&rule.head) {
                        prop_assert_eq!(&v, value);
                    }
                    for read in &s.reads {
                        prop_assert!(a.valuation.holds(read), "{} not in model", read);
                    }
                }
            }
            // Every assigned key has a support.
            for (key, _) in a.valuation.iter() {
                prop_assert!(!a.supports_of(key).is_empty());
            }
        }
    }

    #[test]
    fn stratified_programs_have_at_most_one_answer(p in program_strategy()) {
        let (_, r) = run(&p.text());
        if let Some(r) = r {
            if r.stratified {
                prop_assert_eq!(r.answer_sets.len(), 1);
            }
        }
    }

    #[test]
    fn strict_values_override_defaults(p in program_strategy()) {
        let (g, r) = run(&p.text());
        let Some(r) = r else { return Ok(()) };
        for a in &r.answer_sets {
            for (key, supports) in &a.supports {
                if supports.iter().any(|s| !s.default) {
                    for s in supports.iter().filter(|s| s.default) {
                        let v = head_value(&g.rules[s.rule].head);
                        prop_assert_eq!(v.as_ref(), a.valuation.get(key));
                    }
                }
            }
        }
        // Dropping the defaults of a key fixed by a strict rule changes nothing.
        if r.stratified && r.answer_sets.len() == 1 {
            let a = &r.answer_sets[0];
            for k in (0..5).map(KeyId) {
                let strict = a.supports.iter().any(|(key, ss)| {
                    key.functor == k.name() && ss.iter().any(|s| !s.default)
                });
                if !strict {
                    continue;
                }
                let reduced = GenProgram {
                    rules: p
                        .rules
                        .iter()
                        .filter(|r| !matches!(r.head, HeadKind::Default(key, _) if key == k))
                        .cloned()
                        .collect(),
                };
                let (_, r2) = run(&reduced.text());
                let r2 = r2.expect("removing overridden defaults keeps the program consistent");
                prop_assert_eq!(r2.answer_sets.len(), 1);
                prop_assert_eq!(r2.answer_sets[0].valuation.text(), a.valuation.text());
            }
        }
    }

    #[test]
    fn added_facts_stay(p in program_strategy(), k in 0usize..5, pick in 0usize..3) {
        let (_, r) = run(&p.text());
        let Some(r) = r else { return Ok(()) };
        if !r.stratified {
            return Ok(());
        }
        let key = KeyId(k);
        let value = key.domain()[pick % key.domain().len()];
        let mut extended = p.clone();
        extended.rules.push(GenRule { head: HeadKind::Strict(key, value), body: vec![] });
        let (_, r2) = run(&extended.text());
        if let Some(r2) = r2 {
            let fact = extended.text().lines().last().unwrap().trim_end_matches('.').to_string();
            for a in &r2.answer_sets {
                let text = a.valuation.text();
                let listed = if fact.contains(":=") { fact.replace(" := ", "=") } else { fact.clone() };
                prop_assert!(text.split(' ').any(|x| x == format!("{listed}.")), "{} missing from {}", listed, text);
            }
        }
    }

    #[test]
    fn explanations_are_sound_and_acyclic(p in program_strategy()) {
        let (_, r) = run(&p.text());
        let Some(r) = r else { return Ok(()) };
        for a in &r.answer_sets {
            for target in a.valuation.assignments() {
                let set = explain::explain(&target, a, Mode::Default).unwrap();
                prop_assert!(!set.alternatives.is_empty());
                for t in &set.alternatives {
                    prop_assert!(!t.has_cycle());
                    prop_assert!(leaves_ok(t, a));
                    prop_assert!(edges_ok(t, a));
                }
                for (i, x) in set.alternatives.iter().enumerate() {
                    for y in &set.alternatives[i + 1..] {
                        prop_assert_ne!(x, y);
                    }
                }
            }
        }
    }

    #[test]
    fn elision_preserves_the_labeled_frontier(
        p in program_strategy(),
        mask in prop::collection::vec(any::<bool>(), 8),
    ) {
        let (_, r) = run(&labeled_text(&p, &mask));
        let Some(r) = r else { return Ok(()) };
        for a in &r.answer_sets {
            for target in a.valuation.assignments() {
                let full = explain::explain(&target, a, Mode::Default).unwrap();
                let elided = explain::explain(&target, a, Mode::Labeled).unwrap();
                let expected: BTreeSet<Vec<String>> = full
                    .alternatives
                    .iter()
                    .map(|t| {
                        let mut ls = Vec::new();
                        labels_in(t, &mut ls);
                        ls.sort();
                        ls
                    })
                    .filter(|ls| !ls.is_empty())
                    .collect();
                let got: BTreeSet<Vec<String>> = elided
                    .alternatives
                    .iter()
                    .map(|t| {
                        let mut ls = Vec::new();
                        displayed_labels(t, &mut ls);
                        ls.sort();
                        ls
                    })
                    .collect();
                prop_assert_eq!(got, expected);
            }
        }
    }

    #[test]
    fn solving_is_deterministic(p in program_strategy()) {
        let text = p.text();
        let (_, a) = run(&text);
        let (_, b) = run(&text);
        prop_assert_eq!(a, b);
    }
}
