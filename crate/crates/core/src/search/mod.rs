//! Hyperparameter and architecture search.

mod gp;
mod optimize;
mod pipeline;
mod space;

pub use gp::{expected_improvement, Gp, GpConfig};
pub use optimize::{bayesian_search, derive_seed, random_search, BayesConfig, SearchTrace, Trial};
pub use pipeline::{run_pipeline_search, Method, PipelineSearch, PipelineSearchConfig, SearchSpace};
pub use space::{Dim, ParamSpace};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search budget must be at least 1")]
    ZeroBudget,
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("kernel matrix not positive definite after jitter {0:e}")]
    SingularKernel(f64),
    #[error("objective returned a non-finite value at trial {0}")]
    NonFiniteObjective(usize),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}
