//! Feature selection: gain importance from boosted trees, a cumulative
//! importance cut, then correlation-based redundancy pruning.

mod corr;
mod gbt;
mod select;

use thiserror::Error;

pub use corr::{pearson_r, ranks, spearman_rho};
pub use gbt::{fit_gbt_importance, GbtConfig, Importance};
pub use select::{prune_redundant, select_by_cumulative, select_features, Correlation, FeatureReport, Redundant, SelectConfig};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("series lengths differ")]
    ShapeMismatch,
    #[error("series is constant")]
    ConstantSeries,
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("threshold {0} outside (0, 1]")]
    BadThreshold(f64),
}
