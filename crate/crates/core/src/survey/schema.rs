use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the schemas compiled into the library.
pub const PRESETS: [&str; 4] = ["ocean50", "scenario", "scenario3", "iwp"];

const OCEAN50: &str = include_str!("../../schemas/ocean50.json");
const SCENARIO: &str = include_str!("../../schemas/scenario.json");
const SCENARIO3: &str = include_str!("../../schemas/scenario3.json");
const IWP: &str = include_str!("../../schemas/iwp.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keying {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyItem {
    pub column: String,
    pub dimension: String,
    pub keying: Keying,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Maps questionnaire columns to scored dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveySchema {
    pub name: String,
    pub dimensions: Vec<String>,
    #[serde(default = "default_likert_min")]
    pub likert_min: i64,
    #[serde(default = "default_likert_max")]
    pub likert_max: i64,
    #[serde(default)]
    pub missing_code: i64,
    pub items: Vec<SurveyItem>,
}

fn default_likert_min() -> i64 {
    1
}

fn default_likert_max() -> i64 {
    5
}

impl SurveySchema {
    /// Parses and validates a schema document.
    pub fn from_json(doc: &str) -> Result<Self> {
        let schema: SurveySchema =
            serde_json::from_str(doc).map_err(|e| Error::schema(None, e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    /// The document form; presets re-emit byte for byte.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_json(preset_document(name)?)
    }

    /// A preset name, or else a path to a schema document.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if PRESETS.contains(&name_or_path) {
            return Self::preset(name_or_path);
        }
        let path = Path::new(name_or_path);
        let doc = std::fs::read_to_string(path).map_err(|e| {
            Error::schema(
                None,
                format!("`{name_or_path}` is neither a preset nor a readable file: {e}"),
            )
        })?;
        Self::from_json(&doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::schema(None, "no dimensions declared"));
        }
        let mut dims = HashSet::new();
        for d in &self.dimensions {
            if !dims.insert(d.as_str()) {
                return Err(Error::schema(
                    None,
                    format!("dimension `{d}` declared twice"),
                ));
            }
        }
        if self.likert_min >= self.likert_max {
            return Err(Error::schema(
                None,
                format!(
                    "likert range inverted or empty: {}..{}",
                    self.likert_min, self.likert_max
                ),
            ));
        }
        if self.likert_min < 0 || self.likert_max > i64::from(u32::MAX) {
            return Err(Error::schema(
                None,
                "likert values must be non-negative 32-bit codes",
            ));
        }
        if (self.likert_min..=self.likert_max).contains(&self.missing_code) {
            return Err(Error::schema(
                None,
                format!(
                    "missing code {} lies inside the likert range",
                    self.missing_code
                ),
            ));
        }
        if self.items.is_empty() {
            return Err(Error::schema(None, "no items declared"));
        }
        let mut columns = HashSet::new();
        for item in &self.items {
            if !columns.insert(item.column.as_str()) {
                return Err(Error::schema(Some(&item.column), "duplicate column"));
            }
            if !dims.contains(item.dimension.as_str()) {
                return Err(Error::schema(
                    Some(&item.column),
                    format!("unknown dimension `{}`", item.dimension),
                ));
            }
        }
        Ok(())
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.column.as_str())
    }

    pub fn dimension_index(&self, label: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d == label)
    }

    /// Item count per dimension, in dimension order.
    pub fn items_per_dimension(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dimensions.len()];
        for item in &self.items {
            if let Some(d) = self.dimension_index(&item.dimension) {
                counts[d] += 1;
            }
        }
        counts
    }
}

/// The shipped document for a preset.
pub fn preset_document(name: &str) -> Result<&'static str> {
    match name {
        "ocean50" => Ok(OCEAN50),
        "scenario" => Ok(SCENARIO),
        "scenario3" => Ok(SCENARIO3),
        "iwp" => Ok(IWP),
        other => Err(Error::schema(None, format!("unknown preset `{other}`"))),
    }
}
