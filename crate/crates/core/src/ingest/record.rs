use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Radio access technology reported for a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NetworkMode {
    #[serde(rename = "4G")]
    Lte,
    #[serde(rename = "5G")]
    Nr,
    #[serde(rename = "other")]
    Other,
}

impl NetworkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkMode::Lte => "4G",
            NetworkMode::Nr => "5G",
            NetworkMode::Other => "other",
        }
    }

    /// Maps the labels found in G-NetTrack style logs onto the three buckets.
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_uppercase().as_str() {
            "4G" | "LTE" | "LTE-A" | "LTE+" => NetworkMode::Lte,
            "5G" | "NR" | "NR5G" | "5G-NR" | "NR-NSA" | "NR-SA" => NetworkMode::Nr,
            _ => NetworkMode::Other,
        }
    }
}

impl fmt::Display for NetworkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkMode {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self::from_label(s))
    }
}

/// Download process state: 'I' idle, 'D' downloading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DownloadState {
    Idle,
    Downloading,
}

impl DownloadState {
    pub fn parse(cell: &str) -> Option<Self> {
        match cell.trim() {
            "I" | "i" => Some(DownloadState::Idle),
            "D" | "d" => Some(DownloadState::Downloading),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            DownloadState::Idle => "I",
            DownloadState::Downloading => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Application {
    Streaming,
    Downloading,
}

impl Application {
    pub fn as_str(self) -> &'static str {
        match self {
            Application::Streaming => "Streaming",
            Application::Downloading => "Downloading",
        }
    }
}

impl FromStr for Application {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "streaming" | "stream" | "video" => Ok(Application::Streaming),
            "downloading" | "download" | "file" => Ok(Application::Downloading),
            other => Err(format!("unknown application '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mobility {
    Static,
    Driving,
    Merged,
}

impl FromStr for Mobility {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "static" | "stationary" => Ok(Mobility::Static),
            "driving" | "car" | "in-motion" => Ok(Mobility::Driving),
            "merged" => Ok(Mobility::Merged),
            other => Err(format!("unknown mobility '{other}'")),
        }
    }
}

/// Logical telemetry field. The declaration order is the canonical CSV
/// column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Timestamp,
    Longitude,
    Latitude,
    Speed,
    OperatorName,
    NetworkMode,
    NodeHex,
    LacHex,
    CellId,
    CellIdHex,
    CellIdRaw,
    State,
    DlBitrate,
    UlBitrate,
    PingAvg,
    PingMin,
    PingMax,
    PingStd,
    PingLoss,
    Cqi,
    Snr,
    Rssi,
    Rsrp,
    Rsrq,
    NrxRsrp,
    NrxRsrq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Timestamp,
    Numeric,
    Categorical,
}

impl Field {
    pub const ALL: [Field; 26] = [
        Field::Timestamp,
        Field::Longitude,
        Field::Latitude,
        Field::Speed,
        Field::OperatorName,
        Field::NetworkMode,
        Field::NodeHex,
        Field::LacHex,
        Field::CellId,
        Field::CellIdHex,
        Field::CellIdRaw,
        Field::State,
        Field::DlBitrate,
        Field::UlBitrate,
        Field::PingAvg,
        Field::PingMin,
        Field::PingMax,
        Field::PingStd,
        Field::PingLoss,
        Field::Cqi,
        Field::Snr,
        Field::Rssi,
        Field::Rsrp,
        Field::Rsrq,
        Field::NrxRsrp,
        Field::NrxRsrq,
    ];

    /// Columns a log must carry for ingestion to proceed.
    pub const MANDATORY: [Field; 4] = [
        Field::Timestamp,
        Field::NetworkMode,
        Field::State,
        Field::DlBitrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Timestamp => "timestamp",
            Field::Longitude => "longitude",
            Field::Latitude => "latitude",
            Field::Speed => "speed",
            Field::OperatorName => "operator_name",
            Field::NetworkMode => "network_mode",
            Field::NodeHex => "node_hex",
            Field::LacHex => "lac_hex",
            Field::CellId => "cell_id",
            Field::CellIdHex => "cell_id_hex",
            Field::CellIdRaw => "cell_id_raw",
            Field::State => "state",
            Field::DlBitrate => "dl_bitrate",
            Field::UlBitrate => "ul_bitrate",
            Field::PingAvg => "ping_avg",
            Field::PingMin => "ping_min",
            Field::PingMax => "ping_max",
            Field::PingStd => "ping_std",
            Field::PingLoss => "ping_loss",
            Field::Cqi => "cqi",
            Field::Snr => "snr",
            Field::Rssi => "rssi",
            Field::Rsrp => "rsrp",
            Field::Rsrq => "rsrq",
            Field::NrxRsrp => "nrx_rsrp",
            Field::NrxRsrq => "nrx_rsrq",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Field::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn kind(self) -> FieldKind {
        match self {
            Field::Timestamp => FieldKind::Timestamp,
            Field::OperatorName
            | Field::NetworkMode
            | Field::NodeHex
            | Field::LacHex
            | Field::CellId
            | Field::CellIdHex
            | Field::CellIdRaw
            | Field::State => FieldKind::Categorical,
            _ => FieldKind::Numeric,
        }
    }
}

/// One timestamped telemetry sample.
///
/// Optional quantities are `None` when the log cell was empty or "-"; they
/// are never silently zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub longitude: Option<f64>,
    pub latitude: Option<f64>,
    /// km/h
    pub speed: Option<f64>,
    pub operator_name: Option<String>,
    pub network_mode: NetworkMode,
    pub node_hex: Option<String>,
    pub lac_hex: Option<String>,
    pub cell_id: Option<String>,
    pub cell_id_hex: Option<String>,
    pub cell_id_raw: Option<String>,
    pub state: DownloadState,
    /// kbps
    pub dl_bitrate: Option<f64>,
    /// kbps
    pub ul_bitrate: Option<f64>,
    pub ping_avg: Option<f64>,
    pub ping_min: Option<f64>,
    pub ping_max: Option<f64>,
    pub ping_std: Option<f64>,
    pub ping_loss: Option<f64>,
    pub cqi: Option<i64>,
    pub snr: Option<f64>,
    pub rssi: Option<f64>,
    pub rsrp: Option<f64>,
    pub rsrq: Option<f64>,
    pub nrx_rsrp: Option<f64>,
    pub nrx_rsrq: Option<f64>,
}

impl TelemetryRecord {
    /// A record with only the mandatory fields set.
    pub fn new(timestamp: i64, network_mode: NetworkMode, state: DownloadState, dl_bitrate: f64) -> Self {
        TelemetryRecord {
            timestamp,
            longitude: None,
            latitude: None,
            speed: None,
            operator_name: None,
            network_mode,
            node_hex: None,
            lac_hex: None,
            cell_id: None,
            cell_id_hex: None,
            cell_id_raw: None,
            state,
            dl_bitrate: Some(dl_bitrate),
            ul_bitrate: None,
            ping_avg: None,
            ping_min: None,
            ping_max: None,
            ping_std: None,
            ping_loss: None,
            cqi: None,
            snr: None,
            rssi: None,
            rsrp: None,
            rsrq: None,
            nrx_rsrp: None,
            nrx_rsrq: None,
        }
    }

    /// Value of a numeric field; `None` for missing cells and for
    /// non-numeric fields.
    pub fn numeric(&self, field: Field) -> Option<f64> {
        match field {
            Field::Longitude => self.longitude,
            Field::Latitude => self.latitude,
            Field::Speed => self.speed,
            Field::DlBitrate => self.dl_bitrate,
            Field::UlBitrate => self.ul_bitrate,
            Field::PingAvg => self.ping_avg,
            Field::PingMin => self.ping_min,
            Field::PingMax => self.ping_max,
            Field::PingStd => self.ping_std,
            Field::PingLoss => self.ping_loss,
            Field::Cqi => self.cqi.map(|v| v as f64),
            Field::Snr => self.snr,
            Field::Rssi => self.rssi,
            Field::Rsrp => self.rsrp,
            Field::Rsrq => self.rsrq,
            Field::NrxRsrp => self.nrx_rsrp,
            Field::NrxRsrq => self.nrx_rsrq,
            _ => None,
        }
    }

    pub fn numeric_mut(&mut self, field: Field) -> Option<&mut Option<f64>> {
        Some(match field {
            Field::Longitude => &mut self.longitude,
            Field::Latitude => &mut self.latitude,
            Field::Speed => &mut self.speed,
            Field::DlBitrate => &mut self.dl_bitrate,
            Field::UlBitrate => &mut self.ul_bitrate,
            Field::PingAvg => &mut self.ping_avg,
            Field::PingMin => &mut self.ping_min,
            Field::PingMax => &mut self.ping_max,
            Field::PingStd => &mut self.ping_std,
            Field::PingLoss => &mut self.ping_loss,
            Field::Snr => &mut self.snr,
            Field::Rssi => &mut self.rssi,
            Field::Rsrp => &mut self.rsrp,
            Field::Rsrq => &mut self.rsrq,
            Field::NrxRsrp => &mut self.nrx_rsrp,
            Field::NrxRsrq => &mut self.nrx_rsrq,
            _ => return None,
        })
    }

    /// Value of a categorical field rendered as its label.
    pub fn categorical(&self, field: Field) -> Option<String> {
        match field {
            Field::OperatorName => self.operator_name.clone(),
            Field::NetworkMode => Some(self.network_mode.as_str().to_string()),
            Field::NodeHex => self.node_hex.clone(),
            Field::LacHex => self.lac_hex.clone(),
            Field::CellId => self.cell_id.clone(),
            Field::CellIdHex => self.cell_id_hex.clone(),
            Field::CellIdRaw => self.cell_id_raw.clone(),
            Field::State => Some(self.state.code().to_string()),
            _ => None,
        }
    }
}

/// An ordered set of records from one or more measurement sessions that
/// share a network mode and application.
///
/// `segments` are contiguous, time-sorted index ranges; sliding windows never
/// cross a segment boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDataset {
    pub records: Vec<TelemetryRecord>,
    pub network_mode: NetworkMode,
    pub application: Application,
    pub mobility: Mobility,
    pub source_files: Vec<String>,
    pub segments: Vec<Range<usize>>,
    /// Rows collapsed because they repeated the previous timestamp.
    #[serde(default)]
    pub duplicates_dropped: usize,
}

impl SessionDataset {
    /// Single-segment dataset over `records`.
    pub fn from_records(
        records: Vec<TelemetryRecord>,
        network_mode: NetworkMode,
        application: Application,
        mobility: Mobility,
    ) -> Self {
        let n = records.len();
        SessionDataset {
            records,
            network_mode,
            application,
            mobility,
            source_files: Vec::new(),
            segments: if n == 0 { Vec::new() } else { vec![0..n] },
            duplicates_dropped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn time_span_seconds(&self) -> i64 {
        self.segments
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| self.records[s.end - 1].timestamp - self.records[s.start].timestamp)
            .sum()
    }

    pub fn target_values(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.dl_bitrate).collect()
    }
}
