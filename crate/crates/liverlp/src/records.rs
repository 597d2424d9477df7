//! Transplant case records: loading, fact encoding and synthetic datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{AttributeKind, Schema};

/// A typed attribute value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Sym(String),
}

impl AttrValue {
    pub fn kind(&self) -> AttributeKind {
        match self {
            AttrValue::Bool(_) => AttributeKind::Boolean,
            AttrValue::Int(_) => AttributeKind::Integer,
            AttrValue::Sym(_) => AttributeKind::Symbol,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Int(n) => write!(f, "{n}"),
            AttrValue::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransplantRecord {
    pub case_id: i64,
    /// Missing attributes are simply absent.
    #[serde(default)]
    pub values: BTreeMap<String, AttrValue>,
}

impl TransplantRecord {
    pub fn new(case_id: i64) -> Self {
        TransplantRecord {
            case_id,
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attribute: &str, value: AttrValue) -> Self {
        self.values.insert(attribute.to_string(), value);
        self
    }
}

/// A named collection of records, ordered by case id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: String,
    pub name: String,
    pub records: Vec<TransplantRecord>,
}

impl Dataset {
    pub fn record(&self, case_id: i64) -> Option<&TransplantRecord> {
        self.records.iter().find(|r| r.case_id == case_id)
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("missing `case_id` column")]
    MissingCaseId,
    #[error("row {row}, column `{column}`: expected {expected}, found `{found}`")]
    TypeMismatch {
        row: usize,
        column: String,
        expected: &'static str,
        found: String,
    },
    #[error("duplicate case_id {0}")]
    DuplicateCase(i64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn is_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses one cell according to the attribute kind.
pub fn parse_cell(kind: AttributeKind, cell: &str) -> Option<AttrValue> {
    match kind {
        AttributeKind::Integer => cell.parse().ok().map(AttrValue::Int),
        AttributeKind::Boolean => match cell {
            "true" => Some(AttrValue::Bool(true)),
            "false" => Some(AttrValue::Bool(false)),
            _ => None,
        },
        AttributeKind::Symbol => is_symbol(cell).then(|| AttrValue::Sym(cell.to_string())),
    }
}

/// Reads comma-separated records with a header row. Empty cells are
/// missing values. Rows are numbered as file lines, the header being 1.
pub fn load_csv(text: &str, schema: &Schema) -> Result<Vec<TransplantRecord>, RecordError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut kinds = Vec::with_capacity(headers.len());
    let mut id_column = None;
    for (i, h) in headers.iter().enumerate() {
        if h == "case_id" {
            id_column = Some(i);
            kinds.push(None);
        } else {
            let attr = schema.get(h).ok_or_else(|| RecordError::UnknownColumn(h.clone()))?;
            kinds.push(Some(attr.kind));
        }
    }
    let id_column = id_column.ok_or(RecordError::MissingCaseId)?;

    let mut records = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let id_cell = row.get(id_column).unwrap_or("");
        let case_id = id_cell.parse().map_err(|_| RecordError::TypeMismatch {
            row: line,
            column: "case_id".into(),
            expected: "integer",
            found: id_cell.to_string(),
        })?;
        let mut record = TransplantRecord::new(case_id);
        for (i, cell) in row.iter().enumerate() {
            let Some(Some(kind)) = kinds.get(i) else { continue };
            if cell.is_empty() {
                continue;
            }
            let value = parse_cell(*kind, cell).ok_or_else(|| RecordError::TypeMismatch {
                row: line,
                column: headers[i].clone(),
                expected: kind.as_str(),
                found: cell.to_string(),
            })?;
            record.values.insert(headers[i].clone(), value);
        }
        records.push(record);
    }
    check_unique(&records)?;
    Ok(records)
}

/// Reads a dataset document and checks its values against the schema.
pub fn load_json(text: &str, schema: &Schema) -> Result<Dataset, RecordError> {
    let dataset: Dataset = serde_json::from_str(text)?;
    validate(&dataset.records, schema)?;
    Ok(dataset)
}

/// Checks kinds, attribute names and id uniqueness.
pub fn validate(records: &[TransplantRecord], schema: &Schema) -> Result<(), RecordError> {
    for (i, r) in records.iter().enumerate() {
        for (name, value) in &r.values {
            let attr = schema
                .get(name)
                .ok_or_else(|| RecordError::UnknownColumn(name.clone()))?;
            let ok = value.kind() == attr.kind
                && !matches!(value, AttrValue::Sym(s) if !is_symbol(s));
            if !ok {
                return Err(RecordError::TypeMismatch {
                    row: i + 1,
                    column: name.clone(),
                    expected: attr.kind.as_str(),
                    found: value.to_string(),
                });
            }
        }
    }
    check_unique(records)
}

fn check_unique(records: &[TransplantRecord]) -> Result<(), RecordError> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.case_id) {
            return Err(RecordError::DuplicateCase(r.case_id));
        }
    }
    Ok(())
}

/// CSV text with one column per schema attribute, in schema order.
pub fn to_csv(records: &[TransplantRecord], schema: &Schema) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["case_id"];
    header.extend(schema.names());
    writer.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![r.case_id.to_string()];
        for name in schema.names() {
            row.push(r.values.get(name).map(ToString::to_string).unwrap_or_default());
        }
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// The lppf facts describing one case.
pub fn to_facts(record: &TransplantRecord) -> String {
    let id = record.case_id;
    let mut out = format!("case({id}).\n");
    for (name, value) in &record.values {
        let line = match value {
            AttrValue::Bool(true) => format!("{name}({id}).\n"),
            AttrValue::Bool(false) => format!("~{name}({id}).\n"),
            AttrValue::Int(n) => format!("{name}({id}):={n}.\n"),
            AttrValue::Sym(s) => format!("{name}({id}):={s}.\n"),
        };
        out.push_str(&line);
    }
    out
}

pub const PINNED_LOW: i64 = 686;
pub const PINNED_HIGH_MODERATE: i64 = 763;

/// Activates exactly the cold-ischemia and donor-over-60 categories.
pub fn pinned_686() -> TransplantRecord {
    TransplantRecord::new(PINNED_LOW)
        .with("bmi", AttrValue::Int(24))
        .with("donor_age", AttrValue::Int(65))
        .with("cold_ischemia_h", AttrValue::Int(4))
        .with("icu_pretransplant", AttrValue::Bool(false))
        .with("life_support_pretransplant", AttrValue::Bool(false))
        .with("portal_vein_thrombosis", AttrValue::Bool(false))
        .with("donor_cerebral_vascular_accident", AttrValue::Bool(false))
}

/// Activates the three pretransplant categories plus the donor stroke.
pub fn pinned_763() -> TransplantRecord {
    TransplantRecord::new(PINNED_HIGH_MODERATE)
        .with("bmi", AttrValue::Int(28))
        .with("donor_age", AttrValue::Int(45))
        .with("cold_ischemia_h", AttrValue::Int(8))
        .with("icu_pretransplant", AttrValue::Bool(true))
        .with("life_support_pretransplant", AttrValue::Bool(true))
        .with("portal_vein_thrombosis", AttrValue::Bool(true))
        .with("donor_cerebral_vascular_accident", AttrValue::Bool(true))
}

const FIRST_SYNTHETIC_ID: i64 = 650;

/// `n` deterministic records over the canonical schema. When `n >= 2` the
/// two pinned cases are among them; the rest get sequential ids from 650.
pub fn synthesize(n: usize, seed: u64) -> Vec<TransplantRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pinned = n >= 2;
    let generated = if pinned { n - 2 } else { n };
    let mut records = Vec::with_capacity(n);
    let mut id = FIRST_SYNTHETIC_ID;
    while records.len() < generated {
        if id != PINNED_LOW && id != PINNED_HIGH_MODERATE {
            records.push(random_record(id, &mut rng));
        }
        id += 1;
    }
    if pinned {
        records.push(pinned_686());
        records.push(pinned_763());
    }
    records.sort_by_key(|r| r.case_id);
    records
}

fn random_record(case_id: i64, rng: &mut ChaCha8Rng) -> TransplantRecord {
    let mut r = TransplantRecord::new(case_id);
    let int = |r: &mut TransplantRecord, rng: &mut ChaCha8Rng, name: &str, lo: i64, hi: i64| {
        if rng.random_bool(0.95) {
            r.values.insert(name.to_string(), AttrValue::Int(rng.random_range(lo..=hi)));
        }
    };
    int(&mut r, rng, "bmi", 17, 42);
    int(&mut r, rng, "donor_age", 10, 85);
    int(&mut r, rng, "cold_ischemia_h", 1, 14);
    for (name, p) in [
        ("icu_pretransplant", 0.12),
        ("life_support_pretransplant", 0.06),
        ("portal_vein_thrombosis", 0.08),
        ("donor_cerebral_vascular_accident", 0.4),
    ] {
        r.values.insert(name.to_string(), AttrValue::Bool(rng.random_bool(p)));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::canonical()
    }

    #[test]
    fn csv_row_becomes_typed_record() {
        let text = "case_id,donor_age,cold_ischemia_h,icu_pretransplant\n686,65,4,false\n";
        let rs = load_csv(text, &schema()).unwrap();
        assert_eq!(
            rs,
            vec![TransplantRecord::new(686)
                .with("donor_age", AttrValue::Int(65))
                .with("cold_ischemia_h", AttrValue::Int(4))
                .with("icu_pretransplant", AttrValue::Bool(false))]
        );
    }

    #[test]
    fn header_only_is_empty() {
        assert!(load_csv("case_id,bmi\n", &schema()).unwrap().is_empty());
    }

    #[test]
    fn empty_cells_are_missing() {
        let rs = load_csv("case_id,bmi,donor_age\n1,,30\n", &schema()).unwrap();
        assert!(!rs[0].values.contains_key("bmi"));
    }

    #[test]
    fn load_errors() {
        let dup = load_csv("case_id,bmi\n5,20\n5,21\n", &schema()).unwrap_err();
        assert_eq!(dup.to_string(), "duplicate case_id 5");
        let unknown = load_csv("case_id,xyz\n", &schema()).unwrap_err();
        assert!(matches!(unknown, RecordError::UnknownColumn(c) if c == "xyz"));
        let mismatch = load_csv("case_id,bmi\n1,20\n2,heavy\n", &schema()).unwrap_err();
        assert_eq!(
            mismatch.to_string(),
            "row 3, column `bmi`: expected integer, found `heavy`"
        );
        assert!(matches!(load_csv("bmi\n20\n", &schema()), Err(RecordError::MissingCaseId)));
    }

    #[test]
    fn facts_encoding() {
        let r = TransplantRecord::new(686)
            .with("donor_age", AttrValue::Int(65))
            .with("icu_pretransplant", AttrValue::Bool(false))
            .with("portal_vein_thrombosis", AttrValue::Bool(true));
        assert_eq!(
            to_facts(&r),
            "case(686).\ndonor_age(686):=65.\n~icu_pretransplant(686).\nportal_vein_thrombosis(686).\n"
        );
        assert_eq!(to_facts(&TransplantRecord::new(1)), "case(1).\n");
    }

    #[test]
    fn synthesized_datasets() {
        let a = synthesize(76, 42);
        assert_eq!(a, synthesize(76, 42));
        assert_eq!(a.len(), 76);
        assert!(a.windows(2).all(|w| w[0].case_id < w[1].case_id));
        assert!(a.contains(&pinned_686()) && a.contains(&pinned_763()));
        assert_ne!(a, synthesize(76, 43));
        assert!(synthesize(0, 1).is_empty());
        assert_eq!(synthesize(1, 1).len(), 1);
        assert!(!synthesize(1, 1).contains(&pinned_686()));
        assert_eq!(synthesize(2, 1), vec![pinned_686(), pinned_763()]);
    }

    #[test]
    fn csv_round_trip() {
        let rs = synthesize(30, 7);
        let text = to_csv(&rs, &schema());
        assert_eq!(load_csv(&text, &schema()).unwrap(), rs);
    }

    #[test]
    fn json_dataset_is_validated() {
        let ok = r#"{"id":"d","name":"D","records":[{"case_id":1,"values":{"bmi":30}}]}"#;
        assert_eq!(load_json(ok, &schema()).unwrap().records.len(), 1);
        let bad = r#"{"id":"d","name":"D","records":[{"case_id":1,"values":{"bmi":true}}]}"#;
        assert!(matches!(load_json(bad, &schema()), Err(RecordError::TypeMismatch { .. })));
    }
}
