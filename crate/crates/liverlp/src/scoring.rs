//! Scoring cases with a compiled classifier.

use lppf::explain::{render_trees, ExplanationNode, ExplanationSet};
use lppf::output::{self, Request};
use lppf::solve::AnswerSet;
use lppf::syntax::{parse, Program};
use lppf::{Key, Value};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{compile, Classifier, ClassifierError, Phase};
use crate::records::{to_facts, TransplantRecord};
use crate::schema::Schema;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activated {
    pub rule: String,
    pub weight: i64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseScore {
    pub case_id: i64,
    pub psoft_score: i64,
    pub soft_score: i64,
    pub risk: String,
    pub activated: Vec<Activated>,
}

/// One explanation node as stored in documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub display: String,
    pub atom: String,
    pub labeled: bool,
    pub fact: bool,
    pub children: Vec<TreeNode>,
}

impl From<&ExplanationNode> for TreeNode {
    fn from(n: &ExplanationNode) -> Self {
        TreeNode {
            display: n.display.clone(),
            atom: n.atom.to_string(),
            labeled: n.labeled,
            fact: n.fact,
            children: n.children.iter().map(TreeNode::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub target: String,
    pub alternatives: Vec<TreeNode>,
    pub more: u64,
}

impl From<&ExplanationSet> for Explanation {
    fn from(s: &ExplanationSet) -> Self {
        Explanation {
            target: s.target.to_string(),
            alternatives: s.alternatives.iter().map(TreeNode::from).collect(),
            more: s.more,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub score: CaseScore,
    pub explanations: Vec<Explanation>,
    /// The explanation trees as indented text.
    pub trees: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("case {case_id}: {message}")]
pub struct ScoreError {
    pub case_id: i64,
    pub message: String,
}

/// A classifier compiled and parsed once, ready to score many cases.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub classifier: Classifier,
    pub text: String,
    program: Program,
}

impl Compiled {
    pub fn new(classifier: &Classifier, schema: &Schema) -> Result<Self, ClassifierError> {
        let text = compile(classifier, schema)?;
        let program = parse(&text, &classifier.id).expect("generated programs parse");
        Ok(Compiled {
            classifier: classifier.clone(),
            text,
            program,
        })
    }

    pub fn score(&self, record: &TransplantRecord) -> Result<CaseResult, ScoreError> {
        let fail = |message: String| ScoreError {
            case_id: record.case_id,
            message,
        };
        let facts = parse(&to_facts(record), "facts").map_err(|es| {
            fail(es.iter().map(|e| e.display_with("facts")).collect::<Vec<_>>().join("; "))
        })?;
        let mut program = self.program.clone();
        program.extend(facts);
        let outcome = output::run(&program, &Request::default()).map_err(|e| fail(e.to_string()))?;
        let [answer] = outcome.result.answer_sets.as_slice() else {
            return Err(fail(format!(
                "expected one answer set, found {}",
                outcome.result.answer_sets.len()
            )));
        };
        let sets = outcome
            .explanations
            .as_ref()
            .and_then(|per| per.first())
            .cloned()
            .unwrap_or_default();
        let score = self.interpret(answer, record.case_id).map_err(fail)?;
        Ok(CaseResult {
            score,
            explanations: sets.iter().map(Explanation::from).collect(),
            trees: render_trees(&sets),
        })
    }

    fn interpret(&self, answer: &AnswerSet, case_id: i64) -> Result<CaseScore, String> {
        let key = |f: &str, args: Vec<Value>| Key::new(f, args);
        let case = Value::Int(case_id);
        let int = |f: &str| {
            answer
                .valuation
                .get(&key(f, vec![case.clone()]))
                .and_then(Value::as_int)
                .ok_or_else(|| format!("{f}({case_id}) has no integer value"))
        };
        let psoft_score = int("psoft_cal")?;
        let soft_score = int("soft_cal")?;
        let risk = answer
            .valuation
            .get(&key("risk", vec![case.clone()]))
            .map(Value::raw_text)
            .ok_or_else(|| format!("risk({case_id}) is undefined"))?;
        let activated = self
            .classifier
            .rules
            .iter()
            .filter(|r| {
                answer
                    .supports_of(&key("cat_val", vec![case.clone(), Value::sym(&r.id)]))
                    .iter()
                    .any(|s| !s.default)
            })
            .map(|r| Activated {
                rule: r.id.clone(),
                weight: r.value,
                phase: r.phase,
            })
            .collect();
        Ok(CaseScore {
            case_id,
            psoft_score,
            soft_score,
            risk,
            activated,
        })
    }

    /// Scores every record in parallel, keeping the input order.
    pub fn score_all(&self, records: &[TransplantRecord]) -> Vec<Result<CaseResult, ScoreError>> {
        records.par_iter().map(|r| self.score(r)).collect()
    }
}

/// Convenience wrapper compiling and scoring in one go.
pub fn score_cases(
    classifier: &Classifier,
    schema: &Schema,
    records: &[TransplantRecord],
) -> Result<Vec<Result<CaseResult, ScoreError>>, ClassifierError> {
    Ok(Compiled::new(classifier, schema)?.score_all(records))
}

/// The listing of a batch run: one answer with every case's trees.
pub fn batch_text(results: &[&CaseResult]) -> String {
    let mut out = String::from("Answer:1\n\n");
    let mut explained = 0;
    for r in results {
        out.push_str(&r.trees);
        explained += r.explanations.len();
    }
    out.push_str(&format!("{explained} ocurrences explained.\n\n1 solution\n"));
    out
}

/// The integer in a trailing `[w]` of a label, if present.
pub fn bracketed_weight(display: &str) -> Option<i64> {
    let rest = display.strip_suffix(']')?;
    let open = rest.rfind('[')?;
    rest[open + 1..].parse().ok()
}
