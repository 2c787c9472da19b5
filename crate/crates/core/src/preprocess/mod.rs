//! Reversible data cleaning: categorical and timestamp encoding,
//! missing-value imputation, and normalization.

mod encode;
mod impute;
mod normalize;
mod plan;

use thiserror::Error;

pub use encode::{encode_timestamp, Encoder, Encoding, MISSING_CATEGORY, TIMESTAMP_FEATURES};
pub use impute::{impute, FittedImpute, ImputeMethod};
pub use normalize::{NormKind, Normalizer};
pub use plan::{fingerprint, ColumnPlan, ColumnPolicy, OutputColumn, PreprocessPlan, PreprocessPolicy, PLAN_VERSION};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("target encoding of '{0}' requested but the target has no values")]
    TargetEncodingWithoutTarget(String),
    #[error("every value is missing")]
    AllMissing,
    #[error("column '{0}': every value is missing")]
    AllMissingColumn(String),
    #[error("plan format: {0}")]
    Format(String),
}
