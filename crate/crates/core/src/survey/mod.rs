//! Questionnaire schemas, response ingestion, trait scoring and synthetic
//! respondents.

mod responses;
mod schema;
mod score;
mod synth;

pub use responses::{parse_responses, MissingPolicy, ParseReport, ParsedResponses, ResponseTable};
pub use schema::{preset_document, Keying, SurveyItem, SurveySchema, PRESETS};
pub use score::{normalize_profile, score_profile, TraitProfile};
pub use synth::{generate_synthetic, uniform_mixture, SyntheticSurvey};

use crate::error::Result;

/// Scores every row of a table.
pub fn score_table(table: &ResponseTable, schema: &SurveySchema) -> Result<Vec<TraitProfile>> {
    table
        .values
        .iter()
        .map(|row| score_profile(row, schema))
        .collect()
}
