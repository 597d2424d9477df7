//! Graph exports: DOT text and a structured tree document.

use serde::Serialize;
use serde_json::json;

use super::{ExplanationNode, ExplanationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub roots: usize,
    pub nodes: usize,
    pub edges: usize,
}

/// One node per tree node, an edge from each parent to each child, and
/// every alternative as a separate root.
pub fn render_dot(sets: &[ExplanationSet]) -> String {
    let mut out = String::from("digraph explanation {\n  node [shape=box, fontname=\"monospace\"];\n");
    let mut next = 0usize;
    for set in sets {
        for alt in &set.alternatives {
            emit(alt, &mut next, &mut out);
        }
    }
    out.push_str("}\n");
    out
}

fn emit(n: &ExplanationNode, next: &mut usize, out: &mut String) -> usize {
    let id = *next;
    *next += 1;
    let shape = if n.fact { ", style=rounded" } else { "" };
    out.push_str(&format!("  n{id} [label=\"{}\"{shape}];\n", escape(&n.display)));
    for c in &n.children {
        let child = emit(c, next, out);
        out.push_str(&format!("  n{id} -> n{child};\n"));
    }
    id
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\t' => out.push(' '),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// `{"explanations": [{"target", "alternatives": [{"display", "children", ..}], "more"}]}`
pub fn render_json(sets: &[ExplanationSet]) -> serde_json::Value {
    json!({ "explanations": sets })
}

pub fn graph_stats(sets: &[ExplanationSet]) -> GraphStats {
    let roots = sets.iter().map(|s| s.alternatives.len()).sum();
    let nodes: usize = sets
        .iter()
        .flat_map(|s| &s.alternatives)
        .map(ExplanationNode::size)
        .sum();
    GraphStats {
        roots,
        nodes,
        edges: nodes - roots,
    }
}
