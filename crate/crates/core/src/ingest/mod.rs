//! Telemetry log ingestion: CSV parsing, session partitioning and
//! resampling onto a regular grid.

mod csv_io;
mod partition;
mod record;
mod resample;
mod schema;

use thiserror::Error;

pub use csv_io::{infer_mode, parse_csv, parse_reader, write_canonical_csv, SessionTags, Sidecar};
pub use partition::partition;
pub use record::{
    Application, DownloadState, Field, FieldKind, Mobility, NetworkMode, SessionDataset, TelemetryRecord,
};
pub use resample::{resample_uniform, DEFAULT_MAX_GAP_SECONDS};
pub use schema::Schema;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("conflicting session tags: {0}")]
    ConflictingTags(String),
    #[error("invalid schema map: {0}")]
    Schema(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
