use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{Keying, SurveySchema};
use crate::error::{Error, Result};

/// Per-dimension scores for one respondent, in schema dimension order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitProfile {
    pub raw: IndexMap<String, f64>,
    pub percent: IndexMap<String, f64>,
}

impl TraitProfile {
    /// Dimension with the highest percentage; ties go to the earliest.
    pub fn dominant(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (d, &p) in &self.percent {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((d, p));
            }
        }
        best.map(|(d, _)| d)
    }
}

/// Scores one complete response row. Positive items add their answer,
/// negative items add `likert_min + likert_max - answer`.
pub fn score_profile(row: &[i64], schema: &SurveySchema) -> Result<TraitProfile> {
    if row.len() != schema.items.len() {
        return Err(Error::Alignment {
            expected: schema.items.len(),
            found: row.len(),
        });
    }
    let mut raw: IndexMap<String, f64> =
        schema.dimensions.iter().map(|d| (d.clone(), 0.0)).collect();
    for (item, &v) in schema.items.iter().zip(row) {
        if !(schema.likert_min..=schema.likert_max).contains(&v) {
            return Err(Error::InvalidDataset(format!(
                "item `{}` holds {v}, outside {}..={}; apply a missing-value policy first",
                item.column, schema.likert_min, schema.likert_max
            )));
        }
        let score = match item.keying {
            Keying::Positive => v,
            Keying::Negative => schema.likert_min + schema.likert_max - v,
        };
        // validated schema: every item's dimension is declared
        *raw.get_mut(&item.dimension).expect("declared dimension") += score as f64;
    }
    let percent = normalize_profile(&raw)?;
    Ok(TraitProfile { raw, percent })
}

/// Rescales non-negative raw scores to percentages summing to 100.
pub fn normalize_profile(raw: &IndexMap<String, f64>) -> Result<IndexMap<String, f64>> {
    if raw.values().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::DegenerateProfile);
    }
    let total: f64 = raw.values().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateProfile);
    }
    Ok(raw
        .iter()
        .map(|(d, v)| (d.clone(), 100.0 * v / total))
        .collect())
}
