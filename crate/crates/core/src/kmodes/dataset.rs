use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dissimilarity::{AttributeKind, AttributeSpec, Record, Value};
use crate::error::{Error, Result};

/// Rows of attribute values plus the per-attribute metadata that describes
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDataset {
    pub attrs: Vec<AttributeSpec>,
    pub rows: Vec<Record>,
}

impl CategoricalDataset {
    pub fn new(attrs: Vec<AttributeSpec>, rows: Vec<Record>) -> Result<Self> {
        let ds = Self { attrs, rows };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds an all-categorical dataset from raw code rows. Each attribute's
    /// dictionary lists codes in order of first appearance; row ids are the
    /// row ordinals.
    pub fn from_code_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let mut dictionaries: Vec<Vec<u32>> = vec![Vec::new(); m];
        for row in rows {
            if row.len() != m {
                return Err(Error::Alignment {
                    expected: m,
                    found: row.len(),
                });
            }
            for (dict, &code) in dictionaries.iter_mut().zip(row) {
                if !dict.contains(&code) {
                    dict.push(code);
                }
            }
        }
        let attrs = dictionaries
            .into_iter()
            .enumerate()
            .map(|(j, dict)| AttributeSpec::categorical(j, format!("a{j}"), dict))
            .collect();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| Record::from_codes(i.to_string(), r))
            .collect();
        Self::new(attrs, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn attribute_count(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_all_categorical(&self) -> bool {
        self.attrs.iter().all(AttributeSpec::is_categorical)
    }

    pub fn has_numeric(&self) -> bool {
        self.attrs.iter().any(|a| !a.is_categorical())
    }

    pub fn row_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.row_id.as_str())
    }

    /// Checks the attribute and row invariants.
    pub fn validate(&self) -> Result<()> {
        for (pos, attr) in self.attrs.iter().enumerate() {
            if attr.index != pos {
                return Err(Error::InvalidDataset(format!(
                    "attribute `{}` has index {} but sits at position {pos}",
                    attr.name, attr.index
                )));
            }
            let distinct: HashSet<u32> = attr.categories.iter().copied().collect();
            if distinct.len() != attr.categories.len() {
                return Err(Error::InvalidDataset(format!(
                    "attribute `{}` lists a category code twice",
                    attr.name
                )));
            }
            if attr.kind == AttributeKind::Categorical && attr.categories.is_empty() {
                return Err(Error::InvalidDataset(format!(
                    "categorical attribute `{}` has an empty dictionary",
                    attr.name
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.values.len() != self.attrs.len() {
                return Err(Error::Alignment {
                    expected: self.attrs.len(),
                    found: row.values.len(),
                });
            }
            for (value, attr) in row.values.iter().zip(&self.attrs) {
                match (attr.kind, value) {
                    (AttributeKind::Categorical, Value::Category(c)) => {
                        if attr.rank_of(*c).is_none() {
                            return Err(Error::InvalidDataset(format!(
                                "row {i}: code {c} is not in the dictionary of `{}`",
                                attr.name
                            )));
                        }
                    }
                    (AttributeKind::Numeric, Value::Numeric(v)) => {
                        if !v.is_finite() {
                            return Err(Error::InvalidDataset(format!(
                                "row {i}: non-finite value in `{}`",
                                attr.name
                            )));
                        }
                    }
                    _ => {
                        return Err(Error::InvalidDataset(format!(
                            "row {i}: value kind does not match attribute `{}`",
                            attr.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of the first occurrence of every distinct row, ascending.
    pub fn distinct_row_indices(&self) -> Vec<usize> {
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if seen.insert(row_key(row)) {
                out.push(i);
            }
        }
        out
    }
}

fn row_key(row: &Record) -> Vec<u64> {
    row.values
        .iter()
        .map(|v| match *v {
            Value::Category(c) => u64::from(c),
            Value::Numeric(x) => x.to_bits(),
        })
        .collect()
}
