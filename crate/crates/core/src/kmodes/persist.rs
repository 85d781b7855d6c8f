use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CategoricalDataset, ClusterModel, FitConfig};
use crate::dissimilarity::Prototype;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowAssignment {
    pub row_id: String,
    pub cluster: usize,
}

/// On-disk form of a fitted model. Assignments are keyed by row id so a
/// later run can re-attach them to the same respondents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub config: FitConfig,
    pub cost: f64,
    pub epochs_run: usize,
    pub converged: bool,
    pub attributes: Vec<String>,
    pub modes: Vec<Prototype>,
    pub assignments: Vec<RowAssignment>,
}

impl ModelDocument {
    pub fn new(model: &ClusterModel, dataset: &CategoricalDataset, schema: Option<&str>) -> Self {
        Self {
            schema: schema.map(str::to_owned),
            config: model.config.clone(),
            cost: model.cost,
            epochs_run: model.epochs_run,
            converged: model.converged,
            attributes: dataset.attrs.iter().map(|a| a.name.clone()).collect(),
            modes: model.modes.clone(),
            assignments: dataset
                .rows
                .iter()
                .zip(&model.assignments)
                .map(|(r, &cluster)| RowAssignment {
                    row_id: r.row_id.clone(),
                    cluster,
                })
                .collect(),
        }
    }

    /// Rebuilds the model with assignments in `dataset` row order. Every
    /// dataset row must appear in the document.
    pub fn to_model(&self, dataset: &CategoricalDataset) -> Result<ClusterModel> {
        let names: Vec<&str> = dataset.attrs.iter().map(|a| a.name.as_str()).collect();
        if names
            != self
                .attributes
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
        {
            return Err(Error::InvalidDataset(
                "model attributes do not match the input columns".into(),
            ));
        }
        let k = self.modes.len();
        let by_id: HashMap<&str, usize> = self
            .assignments
            .iter()
            .map(|a| (a.row_id.as_str(), a.cluster))
            .collect();
        let assignments = dataset
            .rows
            .iter()
            .map(|r| match by_id.get(r.row_id.as_str()) {
                Some(&c) if c < k => Ok(c),
                Some(&c) => Err(Error::InvalidDataset(format!(
                    "row `{}` assigned to cluster {c} of {k}",
                    r.row_id
                ))),
                None => Err(Error::InvalidDataset(format!(
                    "row `{}` is not in the model",
                    r.row_id
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterModel {
            modes: self.modes.clone(),
            assignments,
            cost: self.cost,
            epochs_run: self.epochs_run,
            converged: self.converged,
            config: self.config.clone(),
        })
    }
}
