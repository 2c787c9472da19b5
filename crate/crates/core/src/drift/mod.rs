//! Windowed-error drift detection with fine-tune adaptation, a KS
//! distribution check and a drift injector for replays.

mod inject;
mod ks;
mod monitor;

pub use inject::{inject_drift, DriftSegment, DriftTransform, InjectionManifest};
pub use ks::ks_statistic;
pub use monitor::{
    adapt, check, replay_mae, run_monitor, windowed_mae, AdaptationConfig, Adapted, CheckRecord, DriftMonitorState,
    MonitorReport, MonitorSummary, Pair, Stream,
};

#[derive(Debug, thiserror::Error)]
pub enum DriftError {
    #[error("empty evaluation window")]
    EmptyWindow,
    #[error("empty sample")]
    EmptySample,
    #[error("segment out of bounds: {0}")]
    SegmentOutOfBounds(String),
    #[error("recent window too short to form a training window")]
    InsufficientWindow,
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("monitor config: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}
