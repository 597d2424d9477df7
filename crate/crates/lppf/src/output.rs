//! End-to-end runs: program in, answer listing and explanations out.

use serde_json::json;
use thiserror::Error;

use crate::explain::{self, ExplainError, ExplainOptions, ExplanationSet, Mode};
use crate::ground::{self, GroundError, GroundProgram};
use crate::solve::{self, AnswerSet, SolveError, SolveResult};
use crate::syntax::{parse, ParseError, Program};
use crate::value::Assignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

/// What to explain and how to print it.
#[derive(Debug, Clone, Default)]
pub struct Request {
    /// Explicit targets; each must hold in every answer set.
    pub explain: Vec<Assignment>,
    /// Explain every derived assignment.
    pub explain_all: bool,
    pub format: Format,
    /// Forced mode; by default labeled exactly when the program has labels.
    pub mode: Option<Mode>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

/// Parses every source and joins them into one program. Errors come back
/// formatted as `origin:line:col: message`.
pub fn load<'a>(sources: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Program, Vec<String>> {
    let mut program = Program::new();
    let mut errors = Vec::new();
    for (origin, text) in sources {
        match parse(text, origin) {
            Ok(p) => program.extend(p),
            Err(es) => errors.extend(es.iter().map(|e: &ParseError| e.display_with(origin))),
        }
    }
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(errors)
    }
}

/// A solved program with its explanation sets per answer.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub ground: GroundProgram,
    pub result: SolveResult,
    /// `None` when no explanation was requested.
    pub explanations: Option<Vec<Vec<ExplanationSet>>>,
    pub mode: Mode,
}

pub fn run(program: &Program, request: &Request) -> Result<Outcome, RunError> {
    let ground = ground::ground(program)?;
    let result = solve::solve(&ground)?;
    let mode = request.mode.unwrap_or(Mode::automatic(ground.labeled));
    let wants = !request.explain.is_empty() || request.explain_all || !ground.explain.is_empty();
    let explanations = if wants {
        let mut per_answer = Vec::with_capacity(result.answer_sets.len());
        for answer in &result.answer_sets {
            let targets = targets(request, &ground, answer);
            let sets = targets
                .iter()
                .map(|t| explain::explain_with(t, answer, &ExplainOptions::new(mode)))
                .collect::<Result<Vec<_>, _>>()?;
            per_answer.push(sets);
        }
        Some(per_answer)
    } else {
        None
    };
    Ok(Outcome {
        ground,
        result,
        explanations,
        mode,
    })
}

fn targets(request: &Request, ground: &GroundProgram, answer: &AnswerSet) -> Vec<Assignment> {
    if !request.explain.is_empty() {
        let mut ts = request.explain.clone();
        ts.dedup();
        ts
    } else if request.explain_all {
        explain::select_targets(&[], answer)
    } else {
        explain::select_targets(&ground.explain, answer)
    }
}

pub fn render(outcome: &Outcome, format: Format) -> String {
    match format {
        Format::Text => render_text(outcome),
        Format::Json => {
            let mut doc = serde_json::to_string_pretty(&to_json(outcome)).expect("serializable");
            doc.push('\n');
            doc
        }
        Format::Dot => {
            let sets: Vec<ExplanationSet> = match &outcome.explanations {
                Some(per) => per.iter().flatten().cloned().collect(),
                None => outcome
                    .result
                    .answer_sets
                    .iter()
                    .flat_map(|a| {
                        explain::select_targets(&[], a)
                            .into_iter()
                            .filter_map(move |t| explain::explain(&t, a, outcome.mode).ok())
                    })
                    .collect(),
            };
            explain::render_dot(&sets)
        }
    }
}

/// `Answer:N` blocks, explanation trees when requested, and the solution
/// count.
pub fn render_text(outcome: &Outcome) -> String {
    let mut out = String::new();
    for (i, answer) in outcome.result.answer_sets.iter().enumerate() {
        out.push_str(&format!("Answer:{}\n", i + 1));
        match &outcome.explanations {
            Some(per) => {
                out.push('\n');
                out.push_str(&explain::render_text(&per[i]));
            }
            None => {
                for a in answer.derived() {
                    out.push_str(&a.listing());
                    out.push('\n');
                }
            }
        }
    }
    if !outcome.result.answer_sets.is_empty() {
        out.push('\n');
    }
    out.push_str(&solve::solution_count(outcome.result.answer_sets.len()));
    out.push('\n');
    out
}

pub fn to_json(outcome: &Outcome) -> serde_json::Value {
    let answers: Vec<serde_json::Value> = outcome
        .result
        .answer_sets
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut doc = json!({
                "valuation": a.valuation,
                "derived": a.derived(),
            });
            if let Some(per) = &outcome.explanations {
                doc["explanations"] = json!(per[i]);
            }
            doc
        })
        .collect();
    json!({
        "answers": answers,
        "stratified": outcome.result.stratified,
        "mode": outcome.mode,
        "diagnostics": outcome.result.diagnostics,
    })
}
