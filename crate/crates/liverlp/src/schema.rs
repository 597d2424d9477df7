//! Attribute schema for transplant records.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Integer,
    Boolean,
    Symbol,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Integer => "integer",
            AttributeKind::Boolean => "boolean",
            AttributeKind::Symbol => "symbol",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Donor,
    Recipient,
    Surgery,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSchema>,
}

fn attr(name: &str, kind: AttributeKind, group: Group, unit: Option<&str>) -> AttributeSchema {
    AttributeSchema {
        name: name.to_string(),
        kind,
        group,
        unit: unit.map(str::to_string),
    }
}

impl Schema {
    /// The attributes the built-in classifier reads.
    pub fn canonical() -> Self {
        use AttributeKind::*;
        use Group::*;
        Schema {
            attributes: vec![
                attr("bmi", Integer, Recipient, Some("kg/m2")),
                attr("donor_age", Integer, Donor, Some("years")),
                attr("cold_ischemia_h", Integer, Surgery, Some("hours")),
                attr("icu_pretransplant", Boolean, Recipient, None),
                attr("life_support_pretransplant", Boolean, Recipient, None),
                attr("portal_vein_thrombosis", Boolean, Recipient, None),
                attr("donor_cerebral_vascular_accident", Boolean, Donor, None),
            ],
        }
    }

    pub fn get(&self, name: &str) -> Option<&AttributeSchema> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Reads a schema document: `{"attributes": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl Default for Schema {
    fn default() -> Self {
        Schema::canonical()
    }
}
