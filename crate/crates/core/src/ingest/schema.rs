use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::Field;
use super::IngestError;

/// Maps each logical field to the header name used by a particular log
/// variant. Fields absent from the map fall back to the G-NetTrack header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Schema {
    #[serde(flatten)]
    pub overrides: BTreeMap<Field, String>,
}

impl Schema {
    /// Headers as written by G-NetTrack Pro exports of the Irish 4G/5G traces.
    pub fn gnettrack_header(field: Field) -> &'static str {
        match field {
            Field::Timestamp => "Timestamp",
            Field::Longitude => "Longitude",
            Field::Latitude => "Latitude",
            Field::Speed => "Speed",
            Field::OperatorName => "Operatorname",
            Field::NetworkMode => "NetworkMode",
            Field::NodeHex => "Node_hex",
            Field::LacHex => "LAC_hex",
            Field::CellId => "CellID",
            Field::CellIdHex => "CellID_hex",
            Field::CellIdRaw => "CellID_raw",
            Field::State => "State",
            Field::DlBitrate => "DL_bitrate",
            Field::UlBitrate => "UL_bitrate",
            Field::PingAvg => "PINGAVG",
            Field::PingMin => "PINGMIN",
            Field::PingMax => "PINGMAX",
            Field::PingStd => "PINGSTDEV",
            Field::PingLoss => "PINGLOSS",
            Field::Cqi => "CQI",
            Field::Snr => "SNR",
            Field::Rssi => "RSSI",
            Field::Rsrp => "RSRP",
            Field::Rsrq => "RSRQ",
            Field::NrxRsrp => "NRxRSRP",
            Field::NrxRsrq => "NRxRSRQ",
        }
    }

    /// Schema whose header names are the canonical snake_case field names.
    pub fn canonical() -> Self {
        Schema {
            overrides: Field::ALL.iter().map(|f| (*f, f.name().to_string())).collect(),
        }
    }

    pub fn header_for(&self, field: Field) -> &str {
        self.overrides
            .get(&field)
            .map(String::as_str)
            .unwrap_or_else(|| Self::gnettrack_header(field))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| IngestError::Schema(e.to_string()))
    }

    /// Resolves header positions. Header matching is exact first, then
    /// case-insensitive, so the canonical names also match.
    pub(crate) fn resolve(&self, headers: &[String]) -> Result<BTreeMap<Field, usize>, IngestError> {
        let mut positions = BTreeMap::new();
        for field in Field::ALL {
            let wanted = self.header_for(field);
            let pos = headers
                .iter()
                .position(|h| h == wanted)
                .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(wanted)))
                .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(field.name())));
            match pos {
                Some(p) => {
                    positions.insert(field, p);
                }
                None if Field::MANDATORY.contains(&field) => {
                    return Err(IngestError::MissingColumn(wanted.to_string()));
                }
                None => {}
            }
        }
        Ok(positions)
    }
}
