//! Windowing, metrics, the model comparison and the look-back / horizon sweeps.

mod experiments;
mod metrics;
mod report;
mod windows;

pub use experiments::{
    baseline_specs, compare_models, sweep, sweep_horizon, sweep_lookback, timings_csv, CompareConfig, Comparison, SweepConfig, SweepOutcome,
    Timing, AUTOML, BASELINE_LSTM, BASELINE_SEQ2SEQ,
};
pub use metrics::{mae, mape, Mape};
pub use report::{score, MetricsReport, MetricsRow, Scores};
pub use windows::{make_windows, window_count, Split, SplitFractions, WindowedSet};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("series too short: {rows} rows, windows need {needed}")]
    SeriesTooShort { rows: usize, needed: usize },
    #[error("bad split: {0}")]
    BadSplit(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("prediction and actual lengths differ")]
    ShapeMismatch,
    #[error("no points to evaluate")]
    Empty,
    #[error("every actual value is below epsilon")]
    AllExcluded,
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}
