use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kb::{Atom, FactStore, Term};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Production,
    Market,
    Region,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Production => "production",
            Category::Market => "market",
            Category::Region => "region",
        }
    }

    /// Subtypes each category's package handles.
    pub fn subtypes(self) -> &'static [&'static str] {
        match self {
            Category::Production => &["emergency", "equipment-damage", "infrastructure-failure"],
            Category::Market => &["new-competitive-goods", "new-segment", "partner-financial-change"],
            Category::Region => &[
                "fx-change",
                "customs-change",
                "tax-change",
                "political-crisis",
                "energy-crisis",
                "ecocatastrophe",
            ],
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        match s {
            "production" => Some(Category::Production),
            "market" => Some(Category::Market),
            "region" => Some(Category::Region),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether the event has happened or is only signalled as a threat.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventStatus {
    Threat,
    #[default]
    Occurred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    #[serde(default)]
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalEvent {
    pub id: String,
    pub category: Category,
    pub subtype: String,
    #[serde(default)]
    pub status: EventStatus,
    #[serde(default)]
    pub timestamp: String,
    #[serde(default)]
    pub title: String,
    /// Stored verbatim and copied into the report.
    #[serde(default)]
    pub narrative: String,
    /// Operator-supplied damage and context tags.
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub assets: Vec<String>,
    #[serde(default)]
    pub measurements: BTreeMap<String, Measurement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Tags and subtypes use `-` in documents and `_` inside the knowledge base.
pub fn kb_symbol(s: &str) -> String {
    s.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

impl CriticalEvent {
    /// Parses and validates an event document, reporting every bad field.
    pub fn from_json(text: &str) -> Result<CriticalEvent, ScenarioError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| schema("$", format!("invalid JSON: {e}")))?;
        Self::from_value(v)
    }

    pub fn from_value(v: serde_json::Value) -> Result<CriticalEvent, ScenarioError> {
        let Some(obj) = v.as_object() else {
            return Err(schema("$", "event must be a JSON object".into()));
        };
        let mut errs = Vec::new();
        for f in ["id", "category", "subtype"] {
            match obj.get(f) {
                None => errs.push(field(f, "required")),
                Some(x) if !x.is_string() => errs.push(field(f, "must be a string")),
                Some(x) if x.as_str().is_some_and(|s| s.trim().is_empty()) => errs.push(field(f, "must not be empty")),
                _ => {}
            }
        }
        if let Some(c) = obj.get("category").and_then(|c| c.as_str()) {
            if Category::parse(c).is_none() {
                errs.push(field(
                    "category",
                    &format!("unknown category {c:?}; expected production, market or region"),
                ));
            }
        }
        if let Some(s) = obj.get("status").and_then(|c| c.as_str()) {
            if !matches!(s, "threat" | "occurred") {
                errs.push(field(
                    "status",
                    &format!("unknown status {s:?}; expected threat or occurred"),
                ));
            }
        }
        for f in ["tags", "assets"] {
            if let Some(x) = obj.get(f) {
                if !x.as_array().is_some_and(|a| a.iter().all(|e| e.is_string())) {
                    errs.push(field(f, "must be a list of strings"));
                }
            }
        }
        if let Some(m) = obj.get("measurements") {
            match m.as_object() {
                None => errs.push(field("measurements", "must be an object")),
                Some(m) => {
                    for (k, x) in m {
                        if !x.get("value").is_some_and(|v| v.as_f64().is_some_and(f64::is_finite)) {
                            errs.push(field(&format!("measurements.{k}.value"), "must be a finite number"));
                        }
                    }
                }
            }
        }
        if !errs.is_empty() {
            return Err(ScenarioError::Schema(errs));
        }
        serde_json::from_value(v).map_err(|e| schema("$", e.to_string()))
    }

    /// Event facts for the session store.
    pub fn to_facts(&self) -> FactStore {
        let mut s = FactStore::new();
        let sym = |x: &str| Term::sym(kb_symbol(x));
        let mut add = |pred: &str, args: Vec<Term>| {
            s.assert_fact(Atom::new(pred, args)).expect("event facts are ground");
        };
        add("event_id", vec![Term::str(self.id.clone())]);
        add("event_category", vec![Term::sym(self.category.name())]);
        add("event_subtype", vec![sym(&self.subtype)]);
        add(
            "event_status",
            vec![Term::sym(match self.status {
                EventStatus::Threat => "threat",
                EventStatus::Occurred => "occurred",
            })],
        );
        for t in &self.tags {
            add("damage_tag", vec![sym(t)]);
        }
        for a in &self.assets {
            add("affected_asset", vec![sym(a)]);
        }
        for (k, m) in &self.measurements {
            add("measured", vec![sym(k), Term::num(m.value)]);
        }
        s
    }

    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements
            .iter()
            .find(|(k, _)| kb_symbol(k) == kb_symbol(name))
            .map(|(_, m)| m.value)
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| kb_symbol(t) == kb_symbol(tag))
    }
}

fn field(f: &str, m: &str) -> FieldError {
    FieldError {
        field: f.to_string(),
        message: m.to_string(),
    }
}

fn schema(f: &str, m: String) -> ScenarioError {
    ScenarioError::Schema(vec![FieldError {
        field: f.to_string(),
        message: m,
    }])
}
