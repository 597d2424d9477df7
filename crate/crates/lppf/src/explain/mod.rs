//! Explanation trees built from answer-set supports.
//!
//! In default mode each node is an established value and its children are
//! the values one of its supports consulted; facts are leaves. Different
//! supports along the tree give alternative proofs. Labeled mode keeps only
//! nodes whose rule carries a label, splicing the children of the others
//! into their nearest labeled ancestor.

mod graph;
mod select;
mod text;

use serde::Serialize;
use thiserror::Error;

use crate::solve::AnswerSet;
use crate::value::Assignment;

pub use graph::{graph_stats, render_dot, render_json, GraphStats};
pub use select::select_targets;
pub use text::{render_text, render_trees};

pub const DEFAULT_MAX_ALTERNATIVES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Default,
    Labeled,
}

impl Mode {
    /// Labeled mode when the program has labels, default mode otherwise.
    pub fn automatic(labeled: bool) -> Self {
        if labeled {
            Mode::Labeled
        } else {
            Mode::Default
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplanationNode {
    pub display: String,
    pub atom: Assignment,
    /// Ground rule that established the value.
    pub rule: usize,
    pub fact: bool,
    /// Whether `display` is a label.
    pub labeled: bool,
    #[serde(skip)]
    label: Option<String>,
    pub children: Vec<ExplanationNode>,
}

impl ExplanationNode {
    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ExplanationNode::size).sum::<usize>()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.display == other.display
            && self.atom == other.atom
            && self.labeled == other.labeled
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_shape(b))
    }

    /// Whether some path from this node repeats an atom.
    pub fn has_cycle(&self) -> bool {
        fn walk<'a>(n: &'a ExplanationNode, path: &mut Vec<&'a Assignment>) -> bool {
            if path.contains(&&n.atom) {
                return true;
            }
            path.push(&n.atom);
            let found = n.children.iter().any(|c| walk(c, path));
            path.pop();
            found
        }
        walk(self, &mut Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplanationSet {
    pub target: Assignment,
    pub alternatives: Vec<ExplanationNode>,
    /// Alternatives left out by the cap.
    pub more: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("{0} does not hold in the answer set")]
    NotInAnswer(Assignment),
}

#[derive(Debug, Clone)]
pub struct ExplainOptions {
    pub mode: Mode,
    pub max_alternatives: usize,
}

impl ExplainOptions {
    pub fn new(mode: Mode) -> Self {
        ExplainOptions {
            mode,
            max_alternatives: DEFAULT_MAX_ALTERNATIVES,
        }
    }
}

pub fn explain(target: &Assignment, answer: &AnswerSet, mode: Mode) -> Result<ExplanationSet, ExplainError> {
    explain_with(target, answer, &ExplainOptions::new(mode))
}

pub fn explain_with(
    target: &Assignment,
    answer: &AnswerSet,
    opts: &ExplainOptions,
) -> Result<ExplanationSet, ExplainError> {
    if !answer.valuation.holds(target) {
        return Err(ExplainError::NotInAnswer(target.clone()));
    }
    let cap = opts.max_alternatives.max(1);
    let mut path = Vec::new();
    let (mut alternatives, total) = proofs(answer, target, &mut path, cap);
    dedup(&mut alternatives);
    let more = u64::try_from(total.saturating_sub(alternatives.len() as u128)).unwrap_or(u64::MAX);
    if opts.mode == Mode::Labeled {
        alternatives = alternatives.into_iter().filter_map(elide_root).collect();
        dedup(&mut alternatives);
    }
    Ok(ExplanationSet {
        target: target.clone(),
        alternatives,
        more,
    })
}

fn dedup(nodes: &mut Vec<ExplanationNode>) {
    let mut kept: Vec<ExplanationNode> = Vec::with_capacity(nodes.len());
    for n in nodes.drain(..) {
        if !kept.iter().any(|k| k.same_shape(&n)) {
            kept.push(n);
        }
    }
    *nodes = kept;
}

/// Proof trees of `atom`, at most `cap` of them, and how many exist.
fn proofs(
    answer: &AnswerSet,
    atom: &Assignment,
    path: &mut Vec<Assignment>,
    cap: usize,
) -> (Vec<ExplanationNode>, u128) {
    let mut out = Vec::new();
    let mut total: u128 = 0;
    for s in answer.supports_of(&atom.key) {
        let node = |children| ExplanationNode {
            display: atom.to_string(),
            atom: atom.clone(),
            rule: s.rule,
            fact: s.fact,
            labeled: false,
            label: s.label.clone(),
            children,
        };
        if s.fact || s.reads.is_empty() {
            total += 1;
            if out.len() < cap {
                out.push(node(Vec::new()));
            }
            continue;
        }
        if s.reads.iter().any(|r| r == atom || path.contains(r)) {
            continue;
        }
        path.push(atom.clone());
        let options: Vec<(Vec<ExplanationNode>, u128)> =
            s.reads.iter().map(|r| proofs(answer, r, path, cap)).collect();
        path.pop();
        let count = options
            .iter()
            .fold(1u128, |acc, (_, c)| acc.saturating_mul(*c));
        if count == 0 {
            continue;
        }
        total = total.saturating_add(count);
        let room = cap.saturating_sub(out.len());
        for children in product(&options, room) {
            out.push(node(children));
        }
    }
    (out, total)
}

/// The first `limit` combinations picking one alternative per child.
fn product(options: &[(Vec<ExplanationNode>, u128)], limit: usize) -> Vec<Vec<ExplanationNode>> {
    let mut combos: Vec<Vec<ExplanationNode>> = vec![Vec::new()];
    for (alts, _) in options {
        let mut next = Vec::new();
        'outer: for prefix in &combos {
            for a in alts {
                if next.len() >= limit {
                    break 'outer;
                }
                let mut c = prefix.clone();
                c.push(a.clone());
                next.push(c);
            }
        }
        combos = next;
    }
    combos.truncate(limit);
    combos
}

/// Labeled nodes reachable from `node` without passing through another
/// labeled node, each with its own children reduced the same way.
fn frontier(node: ExplanationNode) -> Vec<ExplanationNode> {
    let children: Vec<ExplanationNode> = node.children.into_iter().flat_map(frontier).collect();
    match node.label {
        Some(label) => vec![ExplanationNode {
            display: label.clone(),
            labeled: true,
            label: Some(label),
            children,
            ..node
        }],
        None => children,
    }
}

fn elide_root(root: ExplanationNode) -> Option<ExplanationNode> {
    if root.label.is_some() {
        return frontier(root).pop();
    }
    let mut below: Vec<ExplanationNode> = root.children.clone().into_iter().flat_map(frontier).collect();
    match below.len() {
        0 => None,
        1 => below.pop(),
        _ => Some(ExplanationNode {
            children: below,
            ..root
        }),
    }
}
