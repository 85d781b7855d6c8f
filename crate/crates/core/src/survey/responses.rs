use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SurveySchema;
use crate::dissimilarity::{AttributeSpec, Record};
use crate::error::{Error, Result};
use crate::kmodes::CategoricalDataset;

/// What to do with a row that contains the schema's missing code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    DropRow,
    ImputeMode,
}

/// Integer responses, one row per respondent, columns in schema item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseTable {
    /// Header of the id column in the source file, if it had one.
    pub id_column: Option<String>,
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub values: Vec<Vec<i64>>,
}

impl ResponseTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.values[i]
    }

    /// Writes the table as delimited text: an id column followed by the
    /// item columns.
    pub fn write_csv<W: Write>(&self, out: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(out);
        let id_header = self.id_column.as_deref().unwrap_or("id");
        w.write_record(std::iter::once(id_header).chain(self.columns.iter().map(String::as_str)))?;
        for (id, row) in self.ids.iter().zip(&self.values) {
            let mut record = Vec::with_capacity(row.len() + 1);
            record.push(id.clone());
            record.extend(row.iter().map(i64::to_string));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Categorical view of the table: one attribute per item, the Likert
    /// values themselves as category codes, dictionaries in ascending order.
    pub fn to_dataset(&self, schema: &SurveySchema) -> Result<CategoricalDataset> {
        let categories: Vec<u32> = (schema.likert_min..=schema.likert_max)
            .map(|v| v as u32)
            .collect();
        let attrs = schema
            .items
            .iter()
            .enumerate()
            .map(|(j, item)| AttributeSpec::categorical(j, item.column.clone(), categories.clone()))
            .collect();
        let rows = self
            .ids
            .iter()
            .zip(&self.values)
            .map(|(id, row)| {
                let codes: Vec<u32> = row.iter().map(|&v| v as u32).collect();
                Record::from_codes(id.clone(), &codes)
            })
            .collect();
        CategoricalDataset::new(attrs, rows)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub dropped_ids: Vec<String>,
    pub cells_imputed: usize,
}

#[derive(Debug, Clone)]
pub struct ParsedResponses {
    pub table: ResponseTable,
    pub dataset: CategoricalDataset,
    pub report: ParseReport,
}

/// Reads delimited questionnaire responses.
///
/// The header must name every schema column; other columns are ignored
/// except the first non-schema column, which supplies respondent ids. With
/// no such column ids are the 1-based data row numbers. Errors carry the
/// 1-based data row number (0 for the header).
pub fn parse_responses<R: Read>(
    input: R,
    schema: &SurveySchema,
    delimiter: u8,
    missing: MissingPolicy,
) -> Result<ParsedResponses> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();

    let mut positions = Vec::with_capacity(schema.items.len());
    for item in &schema.items {
        let pos = headers
            .iter()
            .position(|h| h == item.column)
            .ok_or_else(|| Error::Parse {
                row: 0,
                column: Some(item.column.clone()),
                message: "column missing from header".into(),
            })?;
        positions.push(pos);
    }
    let id_pos = headers
        .iter()
        .position(|h| !schema.items.iter().any(|i| i.column == h));
    let id_column = id_pos.map(|p| headers[p].to_string());

    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row: row_no,
            column: None,
            message: e.to_string(),
        })?;
        let id = match id_pos {
            Some(p) => record.get(p).unwrap_or_default().to_string(),
            None => row_no.to_string(),
        };
        if !seen.insert(id.clone()) {
            return Err(Error::Parse {
                row: row_no,
                column: id_column.clone(),
                message: format!("duplicate respondent id `{id}`"),
            });
        }
        let mut row = Vec::with_capacity(positions.len());
        for (item, &p) in schema.items.iter().zip(&positions) {
            let cell = record.get(p).ok_or_else(|| Error::Parse {
                row: row_no,
                column: Some(item.column.clone()),
                message: "row is shorter than the header".into(),
            })?;
            let v: i64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                column: Some(item.column.clone()),
                message: format!("`{cell}` is not an integer"),
            })?;
            if v != schema.missing_code && !(schema.likert_min..=schema.likert_max).contains(&v) {
                return Err(Error::Parse {
                    row: row_no,
                    column: Some(item.column.clone()),
                    message: format!(
                        "{v} outside likert range {}..={}",
                        schema.likert_min, schema.likert_max
                    ),
                });
            }
            row.push(v);
        }
        ids.push(id);
        values.push(row);
    }

    let mut report = ParseReport {
        rows_read: ids.len(),
        ..ParseReport::default()
    };
    let missing_code = schema.missing_code;
    match missing {
        MissingPolicy::DropRow => {
            let mut kept_ids = Vec::with_capacity(ids.len());
            let mut kept = Vec::with_capacity(values.len());
            for (id, row) in ids.into_iter().zip(values) {
                if row.contains(&missing_code) {
                    report.dropped_ids.push(id);
                } else {
                    kept_ids.push(id);
                    kept.push(row);
                }
            }
            ids = kept_ids;
            values = kept;
        }
        MissingPolicy::ImputeMode => {
            for (j, item) in schema.items.iter().enumerate() {
                let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
                for row in &values {
                    if row[j] != missing_code {
                        *counts.entry(row[j]).or_default() += 1;
                    }
                }
                let has_gaps = values.iter().any(|r| r[j] == missing_code);
                if !has_gaps {
                    continue;
                }
                // ascending iteration + strict comparison: lowest value wins ties
                let mode = counts
                    .iter()
                    .fold(None, |best: Option<(i64, usize)>, (&v, &c)| match best {
                        Some((_, bc)) if bc >= c => best,
                        _ => Some((v, c)),
                    })
                    .map(|(v, _)| v)
                    .ok_or_else(|| Error::Parse {
                        row: 0,
                        column: Some(item.column.clone()),
                        message: "no answered values to impute from".into(),
                    })?;
                for row in &mut values {
                    if row[j] == missing_code {
                        row[j] = mode;
                        report.cells_imputed += 1;
                    }
                }
            }
        }
    }
    report.rows_kept = ids.len();
    report.rows_dropped = report.dropped_ids.len();

    let table = ResponseTable {
        id_column,
        columns: schema.columns().map(str::to_owned).collect(),
        ids,
        values,
    };
    let dataset = table.to_dataset(schema)?;
    Ok(ParsedResponses {
        table,
        dataset,
        report,
    })
}
