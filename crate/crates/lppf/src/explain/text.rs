//! Indented text trees.
//!
//! ```text
//! *sentence(gabriel) = prison
//!  |-- punish(gabriel)
//!  |    |-- resist(gabriel)
//! ```
//!
//! Labeled nodes get one extra space after their prefix.

use super::{ExplanationNode, ExplanationSet};

/// Every alternative of every set, each followed by a blank line.
pub fn render_trees(sets: &[ExplanationSet]) -> String {
    let mut out = String::new();
    for set in sets {
        for alt in &set.alternatives {
            node(alt, 0, &mut out);
            out.push('\n');
        }
        if set.more > 0 {
            out.push_str(&format!("(+{} more)\n\n", set.more));
        }
    }
    out
}

/// The trees followed by the occurrence count.
pub fn render_text(sets: &[ExplanationSet]) -> String {
    let mut out = render_trees(sets);
    out.push_str(&format!("{} ocurrences explained.\n", sets.len()));
    out
}

fn node(n: &ExplanationNode, depth: usize, out: &mut String) {
    if depth == 0 {
        out.push('*');
    } else {
        for _ in 1..depth {
            out.push_str(" |   ");
        }
        out.push_str(" |-- ");
    }
    if n.labeled {
        out.push(' ');
    }
    out.push_str(&n.display);
    out.push('\n');
    for c in &n.children {
        node(c, depth + 1, out);
    }
}
