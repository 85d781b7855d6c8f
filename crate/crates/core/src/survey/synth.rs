use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Keying, ResponseTable, SurveySchema};
use crate::error::{Error, Result};

/// Generated responses together with each respondent's latent dominant
/// dimension (an index into `schema.dimensions`).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSurvey {
    pub table: ResponseTable,
    pub latent: Vec<usize>,
}

/// Equal weight on every dimension of the schema.
pub fn uniform_mixture(schema: &SurveySchema) -> Vec<f64> {
    let d = schema.dimensions.len();
    vec![1.0 / d as f64; d]
}

/// Draws `n` respondents. Each gets a dominant dimension from `mixture`;
/// items of that dimension are answered at the favourable extreme
/// (`likert_max` for positive keying, `likert_min` for negative) and every
/// other item at the opposite extreme. Each cell is then replaced by a
/// uniform Likert value with probability `noise`.
pub fn generate_synthetic(
    n: usize,
    schema: &SurveySchema,
    mixture: &[f64],
    noise: f64,
    seed: u64,
) -> Result<SyntheticSurvey> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one respondent".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidConfig(format!(
            "noise {noise} outside [0, 1]"
        )));
    }
    if mixture.len() != schema.dimensions.len() {
        return Err(Error::InvalidMixture(format!(
            "{} weights for {} dimensions",
            mixture.len(),
            schema.dimensions.len()
        )));
    }
    if mixture.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidMixture("weights must be non-negative".into()));
    }
    let total: f64 = mixture.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMixture(format!(
            "weights sum to {total}, not 1"
        )));
    }
    let per_dim = schema.items_per_dimension();
    if let Some(d) = (0..mixture.len()).find(|&d| mixture[d] > 0.0 && per_dim[d] == 0) {
        return Err(Error::InvalidMixture(format!(
            "dimension `{}` has weight but no items",
            schema.dimensions[d]
        )));
    }

    let picker = WeightedIndex::new(mixture).map_err(|e| Error::InvalidMixture(e.to_string()))?;
    let item_dims: Vec<usize> = schema
        .items
        .iter()
        .map(|i| {
            schema
                .dimension_index(&i.dimension)
                .expect("validated schema")
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    let width = n.to_string().len();
    for i in 0..n {
        let dominant = picker.sample(&mut rng);
        let row = schema
            .items
            .iter()
            .zip(&item_dims)
            .map(|(item, &d)| {
                let high = (d == dominant) == (item.keying == Keying::Positive);
                let v = if high {
                    schema.likert_max
                } else {
                    schema.likert_min
                };
                if noise > 0.0 && rng.gen::<f64>() < noise {
                    rng.gen_range(schema.likert_min..=schema.likert_max)
                } else {
                    v
                }
            })
            .collect();
        ids.push(format!("r{:0width$}", i + 1));
        values.push(row);
        latent.push(dominant);
    }
    Ok(SyntheticSurvey {
        table: ResponseTable {
            id_column: Some("id".into()),
            columns: schema.columns().map(str::to_owned).collect(),
            ids,
            values,
        },
        latent,
    })
}
