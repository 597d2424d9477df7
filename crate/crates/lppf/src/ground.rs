//! Grounding: instantiating rule variables over the program's constants.
//!
//! Variables bound positionally (as function-term arguments in positive body
//! literals) range over the universe of constants. With relevance pruning on,
//! each variable is further restricted to the constants that can actually
//! occur at its argument positions, computed as a fixpoint over rule heads;
//! rule instances outside those domains can never fire. Variables bound by
//! value (`S = f(X)`) stay symbolic until solving.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::syntax::safety::{self, Bindings};
use crate::syntax::template;
use crate::syntax::*;
use crate::value::Value;

pub const DEFAULT_MAX_RULES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct GroundOptions {
    /// Restrict variables to the constants reachable at their positions.
    pub prune: bool,
    pub max_rules: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions {
            prune: true,
            max_rules: DEFAULT_MAX_RULES,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GroundError {
    #[error("grounding would produce {total} rules (limit {limit}); largest contributor at {span}: {rule}")]
    TooManyRules {
        total: u128,
        limit: usize,
        rule: String,
        span: Span,
    },
}

/// A rule instance. Positional variables are replaced by constants; only
/// value-bound variables (listed in `bindings`) may remain.
#[derive(Debug, Clone)]
pub struct GroundRule {
    /// Index of the source rule.
    pub origin: usize,
    pub span: Span,
    pub label: Option<Label>,
    pub head: Head,
    pub body: Vec<Literal>,
    /// Value-bound variables and the index of the body equation binding
    /// each, in evaluation order.
    pub bindings: Vec<(String, usize)>,
}

impl PartialEq for GroundRule {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.head == other.head
            && self.body == other.body
            && self.bindings == other.bindings
    }
}

impl GroundRule {
    pub fn to_rule(&self) -> Rule {
        Rule {
            label: self.label.clone(),
            head: self.head.clone(),
            body: self.body.clone(),
            span: self.span.clone(),
        }
    }

    /// A bodiless assignment whose key and value are plain constants.
    pub fn is_fact(&self) -> bool {
        if !self.body.is_empty() {
            return false;
        }
        match &self.head {
            Head::Assert(t) | Head::Deny(t) => t.has_constant_args(),
            Head::Assign(t, Expr::Term(v)) => t.has_constant_args() && v.as_value().is_some(),
            _ => false,
        }
    }

    pub fn is_default(&self) -> bool {
        matches!(self.head, Head::Default(..))
    }
}

impl std::fmt::Display for GroundRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_rule(&self.to_rule()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroundProgram {
    pub rules: Vec<GroundRule>,
    pub universe: BTreeSet<Value>,
    /// Ground function terms occurring in heads and bodies.
    pub function_terms: BTreeSet<FuncTerm>,
    /// `#explain` directives, carried through for target selection.
    pub explain: Vec<Directive>,
    /// Whether any rule carries a label.
    pub labeled: bool,
}

impl GroundProgram {
    /// The ground program as an ordinary program (labels already resolved).
    pub fn to_program(&self) -> Program {
        Program {
            rules: self.rules.iter().map(GroundRule::to_rule).collect(),
            directives: self.explain.clone(),
        }
    }

    pub fn render(&self) -> String {
        render(&self.to_program())
    }
}

/// Every constant occurring in the program's rules, in canonical order.
pub fn universe_of(program: &Program) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    for r in &program.rules {
        collect_head_constants(&r.head, &mut out);
        for l in &r.body {
            collect_payload_constants(&l.payload, &mut out);
        }
    }
    out
}

fn collect_term_constants(t: &Term, out: &mut BTreeSet<Value>) {
    match t {
        Term::Func(f) => f.args.iter().for_each(|a| collect_term_constants(a, out)),
        Term::Var(_) => {}
        other => {
            out.extend(other.as_value());
        }
    }
}

fn collect_expr_constants(e: &Expr, out: &mut BTreeSet<Value>) {
    match e {
        Expr::Term(t) => collect_term_constants(t, out),
        Expr::Binary(l, _, r) => {
            collect_expr_constants(l, out);
            collect_expr_constants(r, out);
        }
    }
}

fn collect_payload_constants(p: &Payload, out: &mut BTreeSet<Value>) {
    match p {
        Payload::Atom(f) | Payload::NegAtom(f) => {
            f.args.iter().for_each(|a| collect_term_constants(a, out))
        }
        Payload::Cmp(l, _, r) => {
            collect_expr_constants(l, out);
            collect_expr_constants(r, out);
        }
    }
}

fn collect_head_constants(h: &Head, out: &mut BTreeSet<Value>) {
    match h {
        Head::Assert(t) | Head::Deny(t) => t.args.iter().for_each(|a| collect_term_constants(a, out)),
        Head::Assign(t, e) | Head::Default(t, e) => {
            t.args.iter().for_each(|a| collect_term_constants(a, out));
            collect_expr_constants(e, out);
        }
        Head::Sum(t, agg) => {
            t.args.iter().for_each(|a| collect_term_constants(a, out));
            for el in &agg.elements {
                el.template
                    .args
                    .iter()
                    .for_each(|a| collect_term_constants(a, out));
                for c in &el.conditions {
                    collect_payload_constants(&c.payload, out);
                }
            }
        }
        Head::Constraint => {}
    }
}

/// Argument position of a functor: (name, arity, index).
type Position = (String, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Domain {
    Any,
    Set(BTreeSet<Value>),
}

impl Domain {
    fn absorb(&mut self, other: &Domain) -> bool {
        match (&mut *self, other) {
            (Domain::Any, _) => false,
            (this, Domain::Any) => {
                *this = Domain::Any;
                true
            }
            (Domain::Set(a), Domain::Set(b)) => {
                let before = a.len();
                a.extend(b.iter().cloned());
                a.len() != before
            }
        }
    }
}

/// Direct variable arguments of function terms, with their positions.
fn var_positions(payload: &Payload, out: &mut Vec<(String, Position)>) {
    payload.walk_funcs(&mut |f| collect_func_var_positions(f, out));
}

fn collect_func_var_positions(f: &FuncTerm, out: &mut Vec<(String, Position)>) {
    for (i, a) in f.args.iter().enumerate() {
        if let Term::Var(v) = a {
            out.push((v.clone(), (f.functor.clone(), f.arity(), i)));
        }
    }
}

struct RuleInfo {
    bindings: Bindings,
    /// Occurrences of positional variables in positive body literals.
    occurrences: Vec<(String, Position)>,
    /// Positional variables in canonical order.
    vars: Vec<String>,
}

fn analyze(rule: &Rule) -> RuleInfo {
    let bindings = safety::analyze_body(&rule.body, &BTreeSet::new());
    let mut occurrences = Vec::new();
    for l in rule.body.iter().filter(|l| !l.negated) {
        var_positions(&l.payload, &mut occurrences);
    }
    let vars = bindings.positional.iter().cloned().collect();
    RuleInfo {
        bindings,
        occurrences,
        vars,
    }
}

struct Domains<'a> {
    universe: &'a BTreeSet<Value>,
    prune: bool,
    positions: BTreeMap<Position, Domain>,
    defined: BTreeSet<(String, usize)>,
}

impl Domains<'_> {
    fn var_domain(&self, var: &str, occurrences: &[(String, Position)]) -> BTreeSet<Value> {
        if !self.prune {
            return self.universe.clone();
        }
        let mut acc: Option<BTreeSet<Value>> = None;
        for (_, pos) in occurrences.iter().filter(|(v, _)| v == var) {
            let dom = match self.positions.get(pos) {
                None => BTreeSet::new(),
                Some(Domain::Any) => continue,
                Some(Domain::Set(s)) => s.clone(),
            };
            acc = Some(match acc {
                None => dom,
                Some(prev) => prev.intersection(&dom).cloned().collect(),
            });
        }
        acc.unwrap_or_else(|| self.universe.clone())
    }

    /// Whether a ground positive literal could ever hold.
    fn may_hold(&self, payload: &Payload) -> bool {
        if !self.prune {
            return true;
        }
        let mut ok = true;
        payload.walk_funcs(&mut |f| {
            if !ok {
                return;
            }
            if !self.defined.contains(&(f.functor.clone(), f.arity())) {
                ok = false;
                return;
            }
            for (i, a) in f.args.iter().enumerate() {
                let Some(v) = a.as_value() else { continue };
                match self.positions.get(&(f.functor.clone(), f.arity(), i)) {
                    Some(Domain::Set(s)) if !s.contains(&v) => ok = false,
                    None => ok = false,
                    _ => {}
                }
            }
        });
        ok
    }
}

pub fn ground(program: &Program) -> Result<GroundProgram, GroundError> {
    ground_with(program, &GroundOptions::default())
}

pub fn ground_with(program: &Program, opts: &GroundOptions) -> Result<GroundProgram, GroundError> {
    let universe = universe_of(program);
    let infos: Vec<RuleInfo> = program.rules.iter().map(analyze).collect();

    let mut doms = Domains {
        universe: &universe,
        prune: opts.prune,
        positions: BTreeMap::new(),
        defined: BTreeSet::new(),
    };
    for r in &program.rules {
        if let Some(t) = r.head.target() {
            doms.defined.insert((t.functor.clone(), t.arity()));
        }
    }
    if opts.prune {
        loop {
            let mut changed = false;
            for (rule, info) in program.rules.iter().zip(&infos) {
                let Some(target) = rule.head.target() else { continue };
                for (i, arg) in target.args.iter().enumerate() {
                    let contribution = match arg {
                        Term::Var(v) if info.bindings.positional.contains(v) => {
                            Domain::Set(doms.var_domain(v, &info.occurrences))
                        }
                        Term::Var(_) | Term::Func(_) => Domain::Any,
                        constant => Domain::Set(constant.as_value().into_iter().collect()),
                    };
                    let pos = (target.functor.clone(), target.arity(), i);
                    let slot = doms
                        .positions
                        .entry(pos)
                        .or_insert_with(|| Domain::Set(BTreeSet::new()));
                    changed |= slot.absorb(&contribution);
                }
            }
            if !changed {
                break;
            }
        }
    }

    // Size check before instantiating anything.
    let mut var_domains: Vec<Vec<Vec<Value>>> = Vec::with_capacity(program.rules.len());
    let mut total: u128 = 0;
    let mut largest: Option<(u128, usize)> = None;
    for (idx, info) in infos.iter().enumerate() {
        let ds: Vec<Vec<Value>> = info
            .vars
            .iter()
            .map(|v| doms.var_domain(v, &info.occurrences).into_iter().collect())
            .collect();
        let count = ds
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
        total = total.saturating_add(count);
        if largest.is_none_or(|(c, _)| count > c) {
            largest = Some((count, idx));
        }
        var_domains.push(ds);
    }
    if total > opts.max_rules as u128 {
        let (_, idx) = largest.expect("non-empty program");
        let r = &program.rules[idx];
        return Err(GroundError::TooManyRules {
            total,
            limit: opts.max_rules,
            rule: render_rule(r),
            span: r.span.clone(),
        });
    }

    let mut rules = Vec::new();
    for (idx, (rule, info)) in program.rules.iter().zip(&infos).enumerate() {
        let ds = &var_domains[idx];
        if ds.iter().any(Vec::is_empty) {
            continue;
        }
        let mut cursor = vec![0usize; ds.len()];
        loop {
            let sigma: BTreeMap<String, Value> = info
                .vars
                .iter()
                .zip(&cursor)
                .zip(ds)
                .map(|((v, &i), d)| (v.clone(), d[i].clone()))
                .collect();
            if let Some(gr) = instantiate(idx, rule, info, &sigma, &doms) {
                rules.push(gr);
            }
            // Advance the odometer.
            let mut k = ds.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < ds[k].len() {
                    break;
                }
                cursor[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if ds.is_empty() || k == usize::MAX {
                break;
            }
        }
    }

    attach_directive_labels(&mut rules, &program.directives);

    let mut function_terms = BTreeSet::new();
    for r in &rules {
        let mut visit = |f: &FuncTerm| {
            if f.is_ground() {
                function_terms.insert(f.clone());
            }
        };
        match &r.head {
            Head::Assert(t) | Head::Deny(t) => t.walk_funcs(&mut visit),
            Head::Assign(t, e) | Head::Default(t, e) => {
                t.walk_funcs(&mut visit);
                e.walk_funcs(&mut visit);
            }
            Head::Sum(t, agg) => {
                t.walk_funcs(&mut visit);
                for el in &agg.elements {
                    el.template.walk_funcs(&mut visit);
                    el.conditions
                        .iter()
                        .for_each(|c| c.payload.walk_funcs(&mut visit));
                }
            }
            Head::Constraint => {}
        }
        for l in &r.body {
            l.payload.walk_funcs(&mut visit);
        }
    }

    let labeled = rules.iter().any(|r| r.label.is_some());
    Ok(GroundProgram {
        rules,
        universe,
        function_terms,
        explain: program.explain_directives().cloned().collect(),
        labeled,
    })
}

fn instantiate(
    origin: usize,
    rule: &Rule,
    info: &RuleInfo,
    sigma: &BTreeMap<String, Value>,
    doms: &Domains<'_>,
) -> Option<GroundRule> {
    let body: Vec<Literal> = rule.body.iter().map(|l| subst_literal(l, sigma)).collect();
    if body
        .iter()
        .filter(|l| !l.negated)
        .any(|l| !doms.may_hold(&l.payload))
    {
        return None;
    }
    let head = match &rule.head {
        Head::Assert(t) => Head::Assert(subst_func(t, sigma)),
        Head::Deny(t) => Head::Deny(subst_func(t, sigma)),
        Head::Assign(t, e) => Head::Assign(subst_func(t, sigma), subst_expr(e, sigma)),
        Head::Default(t, e) => Head::Default(subst_func(t, sigma), subst_expr(e, sigma)),
        Head::Constraint => Head::Constraint,
        Head::Sum(t, agg) => {
            let outer: BTreeSet<String> = info
                .bindings
                .positional
                .iter()
                .chain(info.bindings.by_value.iter().map(|(v, _)| v))
                .cloned()
                .collect();
            let mut elements = Vec::new();
            for el in &agg.elements {
                ground_element(el, &outer, sigma, doms, &mut elements);
            }
            Head::Sum(subst_func(t, sigma), SumAggregate { elements })
        }
    };
    let label = rule.label.as_ref().map(|l| match l {
        Label::Text(text) => Label::Text(template::interpolate(
            text,
            |v| sigma.get(v).map(Value::raw_text),
            false,
        )),
        Label::Term(t) => Label::Term(subst_term(t, sigma)),
    });
    Some(GroundRule {
        origin,
        span: rule.span.clone(),
        label,
        head,
        body,
        bindings: info.bindings.by_value.clone(),
    })
}

fn ground_element(
    el: &AggElement,
    outer: &BTreeSet<String>,
    sigma: &BTreeMap<String, Value>,
    doms: &Domains<'_>,
    out: &mut Vec<AggElement>,
) {
    let mut occurrences = Vec::new();
    collect_func_var_positions_deep(&el.template, &mut occurrences);
    for c in el.conditions.iter().filter(|c| !c.negated) {
        var_positions(&c.payload, &mut occurrences);
    }
    let locals: Vec<String> = safety::element_positional_vars(el)
        .into_iter()
        .filter(|v| !outer.contains(v))
        .collect();
    let ds: Vec<Vec<Value>> = locals
        .iter()
        .map(|v| doms.var_domain(v, &occurrences).into_iter().collect())
        .collect();
    if ds.iter().any(Vec::is_empty) {
        return;
    }
    let mut cursor = vec![0usize; ds.len()];
    loop {
        let mut s = sigma.clone();
        for ((v, &i), d) in locals.iter().zip(&cursor).zip(&ds) {
            s.insert(v.clone(), d[i].clone());
        }
        let conditions: Vec<Literal> = el.conditions.iter().map(|c| subst_literal(c, &s)).collect();
        if conditions
            .iter()
            .filter(|c| !c.negated)
            .all(|c| doms.may_hold(&c.payload))
        {
            out.push(AggElement {
                template: subst_func(&el.template, &s),
                conditions,
            });
        }
        let mut k = ds.len();
        let mut done = true;
        while k > 0 {
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < ds[k].len() {
                done = false;
                break;
            }
            cursor[k] = 0;
        }
        if done {
            break;
        }
    }
}

fn collect_func_var_positions_deep(f: &FuncTerm, out: &mut Vec<(String, Position)>) {
    f.walk_funcs(&mut |g| collect_func_var_positions(g, out));
}

fn attach_directive_labels(rules: &mut [GroundRule], directives: &[Directive]) {
    let patterns: Vec<(&Term, &FuncTerm)> = directives
        .iter()
        .filter_map(|d| match d {
            Directive::Label { label, pattern } => Some((label, pattern)),
            _ => None,
        })
        .collect();
    if patterns.is_empty() {
        return;
    }
    for r in rules.iter_mut().filter(|r| r.label.is_none()) {
        let Some(target) = r.head.target() else { continue };
        for (label, pattern) in &patterns {
            if let Some(sigma) = match_pattern(pattern, target) {
                r.label = Some(Label::Term(subst_term(label, &sigma)));
                break;
            }
        }
    }
}

/// Matches a directive pattern against a ground head target.
pub(crate) fn match_pattern(pattern: &FuncTerm, target: &FuncTerm) -> Option<BTreeMap<String, Value>> {
    if pattern.functor != target.functor || pattern.arity() != target.arity() {
        return None;
    }
    let mut sigma = BTreeMap::new();
    for (p, t) in pattern.args.iter().zip(&target.args) {
        match p {
            Term::Var(v) => {
                let value = t.as_value()?;
                match sigma.get(v) {
                    Some(prev) if prev != &value => return None,
                    _ => {
                        sigma.insert(v.clone(), value);
                    }
                }
            }
            other if other == t => {}
            _ => return None,
        }
    }
    Some(sigma)
}

pub(crate) fn subst_term(t: &Term, sigma: &BTreeMap<String, Value>) -> Term {
    match t {
        Term::Var(v) => match sigma.get(v) {
            Some(val) => Term::from(val.clone()),
            None => t.clone(),
        },
        Term::Func(f) => Term::Func(subst_func(f, sigma)),
        other => other.clone(),
    }
}

pub(crate) fn subst_func(f: &FuncTerm, sigma: &BTreeMap<String, Value>) -> FuncTerm {
    FuncTerm {
        functor: f.functor.clone(),
        args: f.args.iter().map(|a| subst_term(a, sigma)).collect(),
    }
}

pub(crate) fn subst_expr(e: &Expr, sigma: &BTreeMap<String, Value>) -> Expr {
    match e {
        Expr::Term(t) => Expr::Term(subst_term(t, sigma)),
        Expr::Binary(l, op, r) => Expr::Binary(
            Box::new(subst_expr(l, sigma)),
            *op,
            Box::new(subst_expr(r, sigma)),
        ),
    }
}

pub(crate) fn subst_literal(l: &Literal, sigma: &BTreeMap<String, Value>) -> Literal {
    let payload = match &l.payload {
        Payload::Atom(f) => Payload::Atom(subst_func(f, sigma)),
        Payload::NegAtom(f) => Payload::NegAtom(subst_func(f, sigma)),
        Payload::Cmp(a, op, b) => Payload::Cmp(subst_expr(a, sigma), *op, subst_expr(b, sigma)),
    };
    Literal {
        negated: l.negated,
        payload,
    }
}
