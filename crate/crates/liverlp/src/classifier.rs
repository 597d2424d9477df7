//! Weighted rule sets ("classifiers") and their translation to lppf.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use lppf::value::escape_string;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{is_symbol, AttrValue};
use crate::schema::{AttributeKind, Schema};

pub const SCHEMA_VERSION: &str = "v1";
/// Category id of the aggregated pretransplant score.
pub const PSOFT_CATEGORY: &str = "psoft";
pub const BUILTIN_ID: &str = "soft-fragment";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    /// Known before a donor is allocated.
    Psoft,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    fn is_ordering(self) -> bool {
        !matches!(self, Comparator::Eq | Comparator::Ne)
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub comparator: Comparator,
    pub operand: AttrValue,
}

impl Condition {
    pub fn new(attribute: &str, comparator: Comparator, operand: AttrValue) -> Self {
        Condition {
            attribute: attribute.to_string(),
            comparator,
            operand,
        }
    }

    /// Whether a present attribute value satisfies the condition.
    pub fn holds(&self, value: &AttrValue) -> bool {
        use std::cmp::Ordering::*;
        if value.kind() != self.operand.kind() {
            return false;
        }
        let ord = value.cmp(&self.operand);
        match self.comparator {
            Comparator::Eq => ord == Equal,
            Comparator::Ne => ord != Equal,
            Comparator::Lt => ord == Less,
            Comparator::Le => ord != Greater,
            Comparator::Gt => ord == Greater,
            Comparator::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierRule {
    pub id: String,
    pub label: String,
    pub value: i64,
    pub phase: Phase,
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskBand {
    pub name: String,
    pub min: i64,
    /// `None` leaves the band open upwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
}

impl RiskBand {
    pub fn new(name: &str, min: i64, max: Option<i64>) -> Self {
        RiskBand {
            name: name.to_string(),
            min,
            max,
        }
    }
}

fn schema_version() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classifier {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub rules: Vec<ClassifierRule>,
    #[serde(default = "default_bands")]
    pub bands: Vec<RiskBand>,
    #[serde(default)]
    pub version: u64,
    #[serde(default)]
    pub created: Option<DateTime<Utc>>,
    #[serde(default)]
    pub modified: Option<DateTime<Utc>>,
}

pub fn default_bands() -> Vec<RiskBand> {
    vec![
        RiskBand::new("low", 0, Some(5)),
        RiskBand::new("low_moderate", 6, Some(15)),
        RiskBand::new("high_moderate", 16, Some(35)),
        RiskBand::new("high", 36, Some(40)),
        RiskBand::new("futile", 41, None),
    ]
}

/// Band containing `score`; scores below the lowest band fall into it.
pub fn band_for(bands: &[RiskBand], score: i64) -> Option<&str> {
    let lowest = bands.iter().min_by_key(|b| b.min)?;
    if score < lowest.min {
        return Some(&lowest.name);
    }
    bands
        .iter()
        .find(|b| score >= b.min && b.max.is_none_or(|m| score <= m))
        .map(|b| b.name.as_str())
}

fn rule(id: &str, value: i64, phase: Phase, conditions: Vec<Condition>) -> ClassifierRule {
    ClassifierRule {
        id: id.to_string(),
        label: id.to_string(),
        value,
        phase,
        conditions,
    }
}

/// The published fragment of the SOFT score.
pub fn builtin_soft_fragment() -> Classifier {
    use AttrValue::{Bool, Int};
    use Comparator::*;
    let yes = |a: &str| vec![Condition::new(a, Eq, Bool(true))];
    Classifier {
        schema_version: schema_version(),
        id: BUILTIN_ID.to_string(),
        name: "SOFT (published fragment)".to_string(),
        description: "The eight SOFT categories quoted in the liverLP description, with the default risk bands."
            .to_string(),
        rules: vec![
            rule("bmi_gt_35", 2, Phase::Soft, vec![Condition::new("bmi", Gt, Int(35))]),
            rule(
                "donor_age_10_20",
                -2,
                Phase::Soft,
                vec![
                    Condition::new("donor_age", Ge, Int(10)),
                    Condition::new("donor_age", Le, Int(20)),
                ],
            ),
            rule(
                "cold_ischemia_0_6h",
                -3,
                Phase::Soft,
                vec![
                    Condition::new("cold_ischemia_h", Ge, Int(0)),
                    Condition::new("cold_ischemia_h", Le, Int(6)),
                ],
            ),
            rule("donor_age2_gt_60", 3, Phase::Soft, vec![Condition::new("donor_age", Gt, Int(60))]),
            rule("intensive_care_unit_pretransplant", 6, Phase::Psoft, yes("icu_pretransplant")),
            rule("life_support_pretransplant", 9, Phase::Psoft, yes("life_support_pretransplant")),
            rule("portal_vein_thrombosis", 5, Phase::Psoft, yes("portal_vein_thrombosis")),
            rule(
                "donor_cerebral_vascular_accident",
                2,
                Phase::Soft,
                yes("donor_cerebral_vascular_accident"),
            ),
        ],
        bands: default_bands(),
        version: 1,
        created: None,
        modified: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    InvalidId,
    ReservedId,
    DuplicateRuleId,
    EmptyLabel,
    NoConditions,
    UnknownAttribute,
    TypeMismatch,
    UnreachableRule,
    NoBands,
    InvalidBandName,
    DuplicateBandName,
    EmptyBand,
    BandGap,
    BandOverlap,
    BandUncovered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub severity: Severity,
    pub message: String,
    /// Rule the finding is about, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

impl Finding {
    fn error(kind: FindingKind, rule: Option<&str>, message: String) -> Self {
        Finding {
            kind,
            severity: Severity::Error,
            message,
            rule: rule.map(str::to_string),
        }
    }

    fn warning(kind: FindingKind, rule: Option<&str>, message: String) -> Self {
        Finding {
            kind,
            severity: Severity::Warning,
            message,
            rule: rule.map(str::to_string),
        }
    }
}

/// Lowercase letters, digits, `-` and `_`, starting with a letter or digit.
pub fn is_slug(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
        && s.len() <= 64
}

pub fn validate(c: &Classifier, schema: &Schema) -> Vec<Finding> {
    use FindingKind::*;
    let mut out = Vec::new();
    if !is_slug(&c.id) {
        out.push(Finding::error(InvalidId, None, format!("classifier id `{}` is not a slug", c.id)));
    }
    let mut seen = BTreeSet::new();
    for r in &c.rules {
        let rid = Some(r.id.as_str());
        if !is_symbol(&r.id) {
            out.push(Finding::error(
                InvalidId,
                rid,
                format!("rule id `{}` must start with a lowercase letter and use only letters, digits and `_`", r.id),
            ));
        }
        if r.id == PSOFT_CATEGORY {
            out.push(Finding::error(ReservedId, rid, format!("rule id `{PSOFT_CATEGORY}` is reserved")));
        }
        if !seen.insert(r.id.as_str()) {
            out.push(Finding::error(DuplicateRuleId, rid, format!("rule id `{}` is used twice", r.id)));
        }
        if r.label.trim().is_empty() {
            out.push(Finding::error(EmptyLabel, rid, format!("rule `{}` has an empty label", r.id)));
        }
        if r.conditions.is_empty() {
            out.push(Finding::error(NoConditions, rid, format!("rule `{}` has no conditions", r.id)));
        }
        let mut typed = true;
        for cond in &r.conditions {
            let Some(attr) = schema.get(&cond.attribute) else {
                out.push(Finding::error(
                    UnknownAttribute,
                    rid,
                    format!("unknown attribute `{}`", cond.attribute),
                ));
                typed = false;
                continue;
            };
            if cond.operand.kind() != attr.kind {
                out.push(Finding::error(
                    TypeMismatch,
                    rid,
                    format!(
                        "`{}` is {} but is compared with {} `{}`",
                        cond.attribute,
                        attr.kind.as_str(),
                        cond.operand.kind().as_str(),
                        cond.operand
                    ),
                ));
                typed = false;
            } else if attr.kind != AttributeKind::Integer && cond.comparator.is_ordering() {
                out.push(Finding::error(
                    TypeMismatch,
                    rid,
                    format!("`{}` is {} and only supports = and !=", cond.attribute, attr.kind.as_str()),
                ));
                typed = false;
            } else if let AttrValue::Sym(s) = &cond.operand {
                if !is_symbol(s) {
                    out.push(Finding::error(TypeMismatch, rid, format!("`{s}` is not a symbol")));
                    typed = false;
                }
            }
        }
        if typed && !r.conditions.is_empty() && !satisfiable(&r.conditions) {
            out.push(Finding::warning(
                UnreachableRule,
                rid,
                format!("the conditions of rule `{}` contradict each other", r.id),
            ));
        }
    }
    check_bands(c, &mut out);
    out
}

/// Whether some assignment of values satisfies every condition. Conditions
/// on different attributes are independent.
fn satisfiable(conditions: &[Condition]) -> bool {
    let mut by_attr: BTreeMap<&str, Vec<&Condition>> = BTreeMap::new();
    for c in conditions {
        by_attr.entry(&c.attribute).or_default().push(c);
    }
    by_attr.values().all(|cs| match &cs[0].operand {
        AttrValue::Int(_) => {
            let (mut lo, mut hi) = (i64::MIN, i64::MAX);
            let mut excluded = BTreeSet::new();
            for c in cs {
                let AttrValue::Int(n) = c.operand else { return false };
                match c.comparator {
                    Comparator::Eq => {
                        lo = lo.max(n);
                        hi = hi.min(n);
                    }
                    Comparator::Ne => {
                        excluded.insert(n);
                    }
                    Comparator::Lt => hi = hi.min(n.saturating_sub(1)),
                    Comparator::Le => hi = hi.min(n),
                    Comparator::Gt => lo = lo.max(n.saturating_add(1)),
                    Comparator::Ge => lo = lo.max(n),
                }
            }
            if lo > hi {
                return false;
            }
            // Excluded points only matter for a tight interval.
            let width = hi.abs_diff(lo);
            width >= excluded.len() as u64 || (lo..=hi).any(|v| !excluded.contains(&v))
        }
        _ => {
            let equal: BTreeSet<&AttrValue> = cs
                .iter()
                .filter(|c| c.comparator == Comparator::Eq)
                .map(|c| &c.operand)
                .collect();
            let unequal: BTreeSet<&AttrValue> = cs
                .iter()
                .filter(|c| c.comparator == Comparator::Ne)
                .map(|c| &c.operand)
                .collect();
            match equal.len() {
                0 => match &cs[0].operand {
                    AttrValue::Bool(_) => unequal.len() < 2,
                    _ => true,
                },
                1 => !unequal.contains(equal.iter().next().unwrap()),
                _ => false,
            }
        }
    })
}

/// Most negative and most positive soft scores the rules can produce.
pub fn score_range(c: &Classifier) -> (i64, i64) {
    c.rules.iter().fold((0i64, 0i64), |(lo, hi), r| {
        if r.value < 0 {
            (lo.saturating_add(r.value), hi)
        } else {
            (lo, hi.saturating_add(r.value))
        }
    })
}

fn check_bands(c: &Classifier, out: &mut Vec<Finding>) {
    use FindingKind::*;
    if c.bands.is_empty() {
        out.push(Finding::error(NoBands, None, "no risk bands".into()));
        return;
    }
    let mut names = BTreeSet::new();
    for b in &c.bands {
        if !is_symbol(&b.name) {
            out.push(Finding::error(InvalidBandName, None, format!("band name `{}` is not a symbol", b.name)));
        }
        if !names.insert(b.name.as_str()) {
            out.push(Finding::error(DuplicateBandName, None, format!("band `{}` is defined twice", b.name)));
        }
        if b.max.is_some_and(|m| m < b.min) {
            out.push(Finding::error(EmptyBand, None, format!("band `{}` has max below min", b.name)));
        }
    }
    let mut sorted: Vec<&RiskBand> = c.bands.iter().collect();
    sorted.sort_by_key(|b| b.min);
    for w in sorted.windows(2) {
        let (a, b) = (w[0], w[1]);
        match a.max {
            None => out.push(Finding::error(
                BandOverlap,
                None,
                format!("open band `{}` overlaps `{}`", a.name, b.name),
            )),
            Some(m) if m >= b.min => out.push(Finding::error(
                BandOverlap,
                None,
                format!("bands `{}` and `{}` overlap", a.name, b.name),
            )),
            Some(m) if m + 1 < b.min => out.push(Finding::error(
                BandGap,
                None,
                format!("scores {}..{} fall between `{}` and `{}`", m + 1, b.min - 1, a.name, b.name),
            )),
            _ => {}
        }
    }
    let (_, hi) = score_range(c);
    if let Some(top) = sorted.last().and_then(|b| b.max) {
        if hi > top {
            out.push(Finding::error(
                BandUncovered,
                None,
                format!("scores up to {hi} are reachable but the highest band ends at {top}"),
            ));
        }
    }
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("classifier is invalid: {}", summary(.0))]
    Invalid(Vec<Finding>),
    #[error("classifier `{0}` already exists")]
    IdCollision(String),
}

fn summary(findings: &[Finding]) -> String {
    findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .map(|f| f.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Label text safe to embed in an lppf string literal.
fn label_literal(text: &str) -> String {
    escape_string(&text.replace('%', "%%"))
}

fn condition_text(c: &Condition) -> String {
    let a = &c.attribute;
    match (&c.operand, c.comparator) {
        (AttrValue::Bool(b), Comparator::Eq) | (AttrValue::Bool(b), Comparator::Ne)
            if (*b) == (c.comparator == Comparator::Eq) =>
        {
            format!("{a}(P)")
        }
        (AttrValue::Bool(_), _) => format!("~{a}(P)"),
        (operand, cmp) => format!("{a}(P){cmp}{operand}"),
    }
}

/// The lppf line a classifier rule compiles to.
pub fn compile_rule_line(r: &ClassifierRule) -> String {
    let conditions: Vec<String> = r.conditions.iter().map(condition_text).collect();
    format!(
        "\"{} \\t[{}]\" :: cat_val(P, {}) := {} :- {}.",
        label_literal(&r.label),
        r.value,
        r.id,
        r.value,
        conditions.join(", ")
    )
}

fn band_line(band: &RiskBand, lowest: bool) -> String {
    let mut body = vec!["soft_cal(P) = S".to_string()];
    if !lowest {
        body.push(format!("S >= {}", band.min));
    }
    if let Some(m) = band.max {
        body.push(format!("S <= {m}"));
    }
    format!(
        "\"Risk level of %P is {} because SOFT score is %S\" :: risk(P) := {} :- {}.",
        label_literal(&band.name),
        band.name,
        body.join(", ")
    )
}

/// The complete lppf program for a classifier; facts for the cases go
/// alongside it.
pub fn compile(c: &Classifier, schema: &Schema) -> Result<String, ClassifierError> {
    let findings = validate(c, schema);
    if has_errors(&findings) {
        return Err(ClassifierError::Invalid(findings));
    }
    let mut out = String::new();
    out.push_str(&format!("category({PSOFT_CATEGORY}).\n"));
    for r in &c.rules {
        out.push_str(&format!("category({}).\n", r.id));
    }
    for r in c.rules.iter().filter(|r| r.phase == Phase::Psoft) {
        out.push_str(&format!("psoft_cat({}).\n", r.id));
    }
    out.push_str(&format!("soft_cat({PSOFT_CATEGORY}).\n"));
    for r in c.rules.iter().filter(|r| r.phase == Phase::Soft) {
        out.push_str(&format!("soft_cat({}).\n", r.id));
    }
    out.push('\n');
    for r in &c.rules {
        out.push_str(&compile_rule_line(r));
        out.push('\n');
    }
    out.push('\n');
    out.push_str("cat_val(P, C) ^= 0 :- case(P), category(C).\n");
    out.push_str(&format!(
        "\"psoft \\t[%S]\" :: cat_val(P, {PSOFT_CATEGORY}) := S :- psoft_cal(P) = S, S != 0.\n"
    ));
    out.push_str("psoft_cal(P) := #sum{ cat_val(P, C) : psoft_cat(C) } :- case(P).\n");
    out.push_str("\"Activated rules:\" :: soft_cal(P) := #sum{ cat_val(P, C) : soft_cat(C) } :- case(P).\n");
    out.push('\n');
    let mut bands: Vec<&RiskBand> = c.bands.iter().collect();
    bands.sort_by_key(|b| b.min);
    for (i, b) in bands.iter().enumerate() {
        out.push_str(&band_line(b, i == 0));
        out.push('\n');
    }
    out.push_str("\n#explain risk(P) :- case(P).\n");
    Ok(out)
}

/// A deep copy under a new id and name, with fresh timestamps.
pub fn clone_as(source: &Classifier, id: &str, name: &str, now: DateTime<Utc>) -> Classifier {
    Classifier {
        id: id.to_string(),
        name: name.to_string(),
        version: 1,
        created: Some(now),
        modified: Some(now),
        ..source.clone()
    }
}
