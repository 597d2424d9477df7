//! Key-level dependency graph and stratification.
//!
//! Every ground key with rules has a strict node (its `:=`-style rules) and
//! a default node (its `^=` rules). Heads whose key is only known while
//! solving, such as `h(g(1))` or `f(S)` with a value-bound `S`, fall into a
//! per-functor wildcard node. A default depends negatively on every strict
//! rule that could override it.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use crate::ground::GroundRule;
use crate::syntax::*;
use crate::value::Key;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Node {
    Strict(Key),
    Default(Key),
    AnyStrict(String, usize),
    AnyDefault(String, usize),
}

impl Node {
    fn signature(&self) -> (&str, usize) {
        match self {
            Node::Strict(k) | Node::Default(k) => (&k.functor, k.args.len()),
            Node::AnyStrict(f, n) | Node::AnyDefault(f, n) => (f, *n),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Strata {
    /// Level of every rule; constraints get `None`.
    pub rule_levels: Vec<Option<usize>>,
    pub levels: usize,
}

/// A cycle through negation, for diagnostics.
#[derive(Debug, Clone)]
pub(crate) struct NegativeCycle {
    pub nodes: Vec<String>,
}

enum Read {
    Key(Key),
    Functor(String, usize),
}

fn head_node(rule: &GroundRule) -> Option<Node> {
    let target = rule.head.target()?;
    let default = rule.is_default();
    Some(match constant_key(target) {
        Some(k) if default => Node::Default(k),
        Some(k) => Node::Strict(k),
        None if default => Node::AnyDefault(target.functor.clone(), target.arity()),
        None => Node::AnyStrict(target.functor.clone(), target.arity()),
    })
}

fn constant_key(f: &FuncTerm) -> Option<Key> {
    let args: Option<Vec<_>> = f.args.iter().map(Term::as_value).collect();
    Some(Key::new(f.functor.clone(), args?))
}

fn read_of(f: &FuncTerm) -> Read {
    match constant_key(f) {
        Some(k) => Read::Key(k),
        None => Read::Functor(f.functor.clone(), f.arity()),
    }
}

/// Function terms a rule consults, flagged `true` when the dependency is
/// negative (under `not` or inside an aggregate).
fn rule_reads(rule: &GroundRule) -> Vec<(Read, bool)> {
    let mut out = Vec::new();
    for l in &rule.body {
        l.payload.walk_funcs(&mut |f| out.push((read_of(f), l.negated)));
    }
    match &rule.head {
        Head::Assert(t) | Head::Deny(t) => {
            for a in &t.args {
                a.walk_funcs(&mut |f| out.push((read_of(f), false)));
            }
        }
        Head::Assign(t, e) | Head::Default(t, e) => {
            for a in &t.args {
                a.walk_funcs(&mut |f| out.push((read_of(f), false)));
            }
            e.walk_funcs(&mut |f| out.push((read_of(f), false)));
        }
        Head::Sum(t, agg) => {
            for a in &t.args {
                a.walk_funcs(&mut |f| out.push((read_of(f), false)));
            }
            for el in &agg.elements {
                el.template.walk_funcs(&mut |f| out.push((read_of(f), true)));
                for c in &el.conditions {
                    c.payload.walk_funcs(&mut |f| out.push((read_of(f), true)));
                }
            }
        }
        Head::Constraint => {}
    }
    out
}

pub(crate) fn stratify(rules: &[GroundRule]) -> Result<Strata, NegativeCycle> {
    let mut graph: DiGraph<Node, bool> = DiGraph::new();
    let mut index: BTreeMap<Node, NodeIndex> = BTreeMap::new();
    let mut by_functor: BTreeMap<(String, usize), Vec<NodeIndex>> = BTreeMap::new();
    let mut heads = Vec::with_capacity(rules.len());

    for r in rules {
        let node = head_node(r);
        if let Some(n) = &node {
            if !index.contains_key(n) {
                let ix = graph.add_node(n.clone());
                index.insert(n.clone(), ix);
                let (f, a) = n.signature();
                by_functor.entry((f.to_string(), a)).or_default().push(ix);
            }
        }
        heads.push(node);
    }

    let mut edges: BTreeSet<(NodeIndex, NodeIndex, bool)> = BTreeSet::new();

    // Structural edges between the nodes of one functor.
    for ((f, a), nodes) in &by_functor {
        let any_strict = index.get(&Node::AnyStrict(f.clone(), *a)).copied();
        let any_default = index.get(&Node::AnyDefault(f.clone(), *a)).copied();
        for &ix in nodes {
            match &graph[ix] {
                Node::Strict(_) => {
                    if let Some(w) = any_strict {
                        edges.insert((ix, w, false));
                        edges.insert((w, ix, false));
                    }
                    if let Some(w) = any_default {
                        edges.insert((w, ix, true));
                    }
                }
                Node::Default(k) => {
                    if let Some(s) = index.get(&Node::Strict(k.clone())) {
                        edges.insert((ix, *s, true));
                    }
                    if let Some(w) = any_strict {
                        edges.insert((ix, w, true));
                    }
                    if let Some(w) = any_default {
                        edges.insert((ix, w, false));
                        edges.insert((w, ix, false));
                    }
                }
                Node::AnyDefault(..) => {
                    if let Some(w) = any_strict {
                        edges.insert((ix, w, true));
                    }
                }
                Node::AnyStrict(..) => {}
            }
        }
    }

    // Competing defaults may override one another.
    let mut default_values: BTreeMap<Node, Vec<&Expr>> = BTreeMap::new();
    for (r, node) in rules.iter().zip(&heads) {
        if let (Some(n), Head::Default(_, e)) = (node, &r.head) {
            default_values.entry(n.clone()).or_default().push(e);
        }
    }
    let mut defaults_per_functor: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for (n, vs) in &default_values {
        let (f, a) = n.signature();
        *defaults_per_functor.entry((f.to_string(), a)).or_default() += vs.len();
    }
    for (n, vs) in &default_values {
        let ix = index[n];
        let competing = match n {
            Node::AnyDefault(f, a) => defaults_per_functor[&(f.clone(), *a)] > 1,
            _ => {
                let first = vs[0];
                let constant = matches!(first, Expr::Term(t) if t.as_value().is_some());
                !(constant && vs.iter().all(|e| *e == first))
            }
        };
        if competing && vs.len() + usize::from(matches!(n, Node::AnyDefault(..))) > 1 {
            edges.insert((ix, ix, true));
        }
    }

    // Dependencies through rule bodies.
    for (r, node) in rules.iter().zip(&heads) {
        let Some(head) = node else { continue };
        let from = index[head];
        for (read, negative) in rule_reads(r) {
            let targets: Vec<NodeIndex> = match &read {
                Read::Key(k) => {
                    let mut t = Vec::new();
                    for n in [Node::Strict(k.clone()), Node::Default(k.clone())] {
                        t.extend(index.get(&n));
                    }
                    let sig = (k.functor.clone(), k.args.len());
                    for n in [Node::AnyStrict(sig.0.clone(), sig.1), Node::AnyDefault(sig.0, sig.1)] {
                        t.extend(index.get(&n));
                    }
                    t
                }
                Read::Functor(f, a) => by_functor.get(&(f.clone(), *a)).cloned().unwrap_or_default(),
            };
            for to in targets {
                edges.insert((from, to, negative));
            }
        }
    }

    for (a, b, neg) in &edges {
        graph.add_edge(*a, *b, *neg);
    }

    // Components come out dependencies first.
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; graph.node_count()];
    for (c, members) in sccs.iter().enumerate() {
        for &m in members {
            component[m.index()] = c;
        }
    }
    let mut level = vec![0usize; graph.node_count()];
    for (c, members) in sccs.iter().enumerate() {
        let mut lv = 0;
        for &m in members {
            for e in graph.edges(m) {
                let t = e.target();
                let negative = *e.weight();
                if component[t.index()] == c {
                    if negative {
                        let mut nodes: Vec<String> =
                            members.iter().map(|n| describe(&graph[*n])).collect();
                        nodes.sort();
                        return Err(NegativeCycle { nodes });
                    }
                    continue;
                }
                lv = lv.max(level[t.index()] + usize::from(negative));
            }
        }
        for &m in members {
            level[m.index()] = lv;
        }
    }

    let rule_levels: Vec<Option<usize>> = heads
        .iter()
        .map(|h| h.as_ref().map(|n| level[index[n].index()]))
        .collect();
    let levels = rule_levels.iter().flatten().max().map_or(0, |m| m + 1);
    Ok(Strata {
        rule_levels,
        levels,
    })
}

fn describe(n: &Node) -> String {
    match n {
        Node::Strict(k) => k.to_string(),
        Node::Default(k) => format!("{k} (default)"),
        Node::AnyStrict(f, a) => format!("{f}/{a}"),
        Node::AnyDefault(f, a) => format!("{f}/{a} (default)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground;

    fn strata(src: &str) -> Result<Strata, NegativeCycle> {
        stratify(&ground(&parse(src, "t").unwrap()).unwrap().rules)
    }

    #[test]
    fn default_sits_above_its_override() {
        let s = strata(
            "person(a). punish(a). sentence(P) ^= innocent :- person(P).\nsentence(P) := prison :- punish(P).",
        )
        .unwrap();
        assert_eq!(s.rule_levels, vec![Some(0), Some(0), Some(1), Some(0)]);
    }

    #[test]
    fn even_loop_through_negation_is_not_stratified() {
        let err = strata("a :- not b. b :- not a.").unwrap_err();
        assert_eq!(err.nodes, vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn competing_defaults_are_not_stratified() {
        assert!(strata("f ^= 1. f ^= 2.").is_err());
        assert!(strata("f ^= 1. f ^= 1.").is_ok());
    }

    #[test]
    fn aggregates_sit_above_their_elements() {
        let s = strata("c(a). g(a) := 2. t := #sum{ g(C) : c(C) }.").unwrap();
        assert_eq!(s.rule_levels[2], Some(1));
    }

    #[test]
    fn positive_recursion_shares_a_level() {
        let s = strata("e(1,2). e(2,3). p(1). p(Y) :- p(X), e(X,Y).").unwrap();
        assert!(s.levels == 1);
    }
}
