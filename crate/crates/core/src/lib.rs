//! K-modes clustering for categorical and mixed data, with a Likert
//! questionnaire pipeline that scores Big Five (OCEAN) and individual work
//! performance dimensions, clusters respondents and reports trait
//! percentages.

pub mod cli;
pub mod dissimilarity;
pub mod error;
pub mod kmodes;
pub mod report;
pub mod survey;

pub use error::{Error, Result};
