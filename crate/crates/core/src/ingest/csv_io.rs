use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::record::{Application, DownloadState, Field, Mobility, NetworkMode, SessionDataset, TelemetryRecord};
use super::schema::Schema;
use super::IngestError;

/// Session tags that cannot be read from the rows themselves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTags {
    pub network_mode: Option<NetworkMode>,
    pub application: Option<Application>,
    pub mobility: Option<Mobility>,
}

impl SessionTags {
    /// Guesses tags from directory names such as `5G/Download/Driving/...`.
    pub fn from_path(path: &Path) -> Self {
        let lower = path.to_string_lossy().to_ascii_lowercase();
        let application = if ["download", "file"].iter().any(|k| lower.contains(k)) {
            Some(Application::Downloading)
        } else if ["netflix", "amazon", "stream", "video"].iter().any(|k| lower.contains(k)) {
            Some(Application::Streaming)
        } else {
            None
        };
        let mobility = if lower.contains("static") {
            Some(Mobility::Static)
        } else if lower.contains("driving") {
            Some(Mobility::Driving)
        } else {
            None
        };
        SessionTags { network_mode: None, application, mobility }
    }

    fn or(self, fallback: SessionTags) -> SessionTags {
        SessionTags {
            network_mode: self.network_mode.or(fallback.network_mode),
            application: self.application.or(fallback.application),
            mobility: self.mobility.or(fallback.mobility),
        }
    }
}

/// Parses one G-NetTrack style CSV log.
///
/// Tags not given in `tags` are inferred: the application and mobility from
/// the path, the network mode from the rows (see [`infer_mode`]).
pub fn parse_csv(path: &Path, schema: &Schema, tags: SessionTags) -> Result<SessionDataset, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io(path.display().to_string(), e))?;
    let tags = tags.or(SessionTags::from_path(path));
    let mut ds = parse_reader(file, schema, tags)?;
    ds.source_files = vec![path.display().to_string()];
    Ok(ds)
}

pub fn parse_reader<R: Read>(reader: R, schema: &Schema, tags: SessionTags) -> Result<SessionDataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let positions = schema.resolve(&headers)?;

    let mut records: Vec<TelemetryRecord> = Vec::new();
    let mut duplicates = 0usize;
    for (i, row) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| IngestError::MalformedRow { line, reason: e.to_string() })?;
        let rec = parse_row(&row, &positions, line)?;
        if let Some(prev) = records.last_mut() {
            if rec.timestamp < prev.timestamp {
                return Err(IngestError::MalformedRow {
                    line,
                    reason: format!("timestamp {} precedes previous {}", rec.timestamp, prev.timestamp),
                });
            }
            if rec.timestamp == prev.timestamp {
                *prev = rec;
                duplicates += 1;
                continue;
            }
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let network_mode = match tags.network_mode {
        Some(m) => m,
        None => infer_mode(&records)?,
    };
    let mut ds = SessionDataset::from_records(
        records,
        network_mode,
        tags.application.unwrap_or(Application::Downloading),
        tags.mobility.unwrap_or(Mobility::Static),
    );
    ds.duplicates_dropped = duplicates;
    Ok(ds)
}

/// The session's mode when the rows agree on a single 4G/5G value.
/// Rows tagged `other` are ignored; a mix of 4G and 5G rows is a conflict
/// that must be resolved with an explicit tag.
pub fn infer_mode(records: &[TelemetryRecord]) -> Result<NetworkMode, IngestError> {
    let has_lte = records.iter().any(|r| r.network_mode == NetworkMode::Lte);
    let has_nr = records.iter().any(|r| r.network_mode == NetworkMode::Nr);
    match (has_lte, has_nr) {
        (true, true) => Err(IngestError::ConflictingTags("rows report both 4G and 5G".into())),
        (true, false) => Ok(NetworkMode::Lte),
        (false, true) => Ok(NetworkMode::Nr),
        (false, false) => Ok(NetworkMode::Other),
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "-" || cell.eq_ignore_ascii_case("nan")
}

fn parse_timestamp(cell: &str) -> Option<i64> {
    if let Ok(v) = cell.parse::<i64>() {
        return Some(v);
    }
    if let Ok(v) = cell.parse::<f64>() {
        if v.is_finite() {
            return Some(v.floor() as i64);
        }
    }
    const FORMATS: [&str; 4] = ["%Y.%m.%d_%H.%M.%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y/%m/%d %H:%M:%S"];
    FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(cell, fmt).ok())
        .map(|dt| dt.and_utc().timestamp())
}

fn parse_row(row: &csv::StringRecord, positions: &BTreeMap<Field, usize>, line: usize) -> Result<TelemetryRecord, IngestError> {
    let cell = |f: Field| -> Option<&str> { positions.get(&f).and_then(|&p| row.get(p)) };
    let malformed = |reason: String| IngestError::MalformedRow { line, reason };

    let ts_cell = cell(Field::Timestamp).unwrap_or("");
    let timestamp = parse_timestamp(ts_cell).ok_or_else(|| malformed(format!("timestamp '{ts_cell}' not recognised")))?;

    let mode_cell = cell(Field::NetworkMode).unwrap_or("");
    let network_mode = NetworkMode::from_label(mode_cell);

    let state_cell = cell(Field::State).unwrap_or("");
    let state = DownloadState::parse(state_cell).ok_or_else(|| malformed(format!("state '{state_cell}' is not I or D")))?;

    let numeric = |f: Field| -> Result<Option<f64>, IngestError> {
        match cell(f) {
            None => Ok(None),
            Some(c) if is_missing(c) => Ok(None),
            Some(c) => match c.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(malformed(format!("{} not numeric", f.name()))),
            },
        }
    };
    let non_negative = |f: Field| -> Result<Option<f64>, IngestError> {
        let v = numeric(f)?;
        match v {
            Some(x) if x < 0.0 => Err(malformed(format!("{} negative", f.name()))),
            _ => Ok(v),
        }
    };
    let text = |f: Field| -> Option<String> { cell(f).filter(|c| !is_missing(c)).map(str::to_string) };

    let cqi = match numeric(Field::Cqi)? {
        None => None,
        Some(v) if v.fract() == 0.0 => Some(v as i64),
        Some(_) => return Err(malformed("cqi not an integer".into())),
    };

    Ok(TelemetryRecord {
        timestamp,
        longitude: numeric(Field::Longitude)?,
        latitude: numeric(Field::Latitude)?,
        speed: numeric(Field::Speed)?,
        operator_name: text(Field::OperatorName),
        network_mode,
        node_hex: text(Field::NodeHex),
        lac_hex: text(Field::LacHex),
        cell_id: text(Field::CellId),
        cell_id_hex: text(Field::CellIdHex),
        cell_id_raw: text(Field::CellIdRaw),
        state,
        dl_bitrate: non_negative(Field::DlBitrate)?,
        ul_bitrate: non_negative(Field::UlBitrate)?,
        ping_avg: non_negative(Field::PingAvg)?,
        ping_min: non_negative(Field::PingMin)?,
        ping_max: non_negative(Field::PingMax)?,
        ping_std: non_negative(Field::PingStd)?,
        ping_loss: non_negative(Field::PingLoss)?,
        cqi,
        snr: numeric(Field::Snr)?,
        rssi: numeric(Field::Rssi)?,
        rsrp: numeric(Field::Rsrp)?,
        rsrq: numeric(Field::Rsrq)?,
        nrx_rsrp: numeric(Field::NrxRsrp)?,
        nrx_rsrq: numeric(Field::NrxRsrq)?,
    })
}

fn render(rec: &TelemetryRecord, field: Field) -> String {
    match field.kind() {
        super::record::FieldKind::Timestamp => rec.timestamp.to_string(),
        super::record::FieldKind::Categorical => rec.categorical(field).unwrap_or_default(),
        super::record::FieldKind::Numeric => match field {
            Field::Cqi => rec.cqi.map(|v| v.to_string()).unwrap_or_default(),
            _ => rec.numeric(field).map(|v| format!("{v}")).unwrap_or_default(),
        },
    }
}

/// Writes records in the canonical column order with snake_case headers.
/// Missing values are empty cells; floats use shortest round-trip form.
pub fn write_canonical_csv<W: Write>(records: &[TelemetryRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(Field::ALL.iter().map(|f| f.name()))
        .map_err(|e| IngestError::Csv(e.to_string()))?;
    for rec in records {
        w.write_record(Field::ALL.iter().map(|f| render(rec, *f)))
            .map_err(|e| IngestError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| IngestError::Csv(e.to_string()))?;
    Ok(())
}

/// Summary written next to each canonical CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub record_count: usize,
    pub time_span_seconds: i64,
    pub mode: NetworkMode,
    pub application: Application,
}

impl Sidecar {
    pub fn of(ds: &SessionDataset) -> Self {
        Sidecar {
            record_count: ds.len(),
            time_span_seconds: ds.time_span_seconds(),
            mode: ds.network_mode,
            application: ds.application,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Timestamp,NetworkMode,State,DL_bitrate,UL_bitrate,RSRP,CQI\n";

    fn parse(body: &str) -> Result<SessionDataset, IngestError> {
        let text = format!("{HEADER}{body}");
        parse_reader(text.as_bytes(), &Schema::default(), SessionTags::default())
    }

    #[test]
    fn header_only_file_is_empty() {
        assert!(matches!(parse(""), Err(IngestError::EmptyFile)));
    }

    #[test]
    fn state_d_parses_as_downloading() {
        let ds = parse("2019.12.14_11.26.38,NR,D,1200,30,-95,11\n").unwrap();
        assert_eq!(ds.records[0].state, DownloadState::Downloading);
        assert_eq!(ds.records[0].network_mode, NetworkMode::Nr);
        assert_eq!(ds.network_mode, NetworkMode::Nr);
        assert_eq!(ds.records[0].timestamp, 1_576_322_798);
    }

    #[test]
    fn non_numeric_bitrate_names_line_and_field() {
        match parse("10,LTE,I,0,0,-90,9\n11,LTE,D,abc,0,-90,9\n") {
            Err(IngestError::MalformedRow { line, reason }) => {
                assert_eq!(line, 3);
                assert_eq!(reason, "dl_bitrate not numeric");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_cells_are_explicit() {
        let ds = parse("10,LTE,D,500,-,,\n").unwrap();
        let r = &ds.records[0];
        assert_eq!(r.ul_bitrate, None);
        assert_eq!(r.rsrp, None);
        assert_eq!(r.cqi, None);
        // column absent from the header entirely
        assert_eq!(r.snr, None);
    }

    #[test]
    fn duplicate_timestamp_keeps_last_row() {
        let ds = parse("10,LTE,D,500,,,\n10,LTE,D,700,,,\n11,LTE,D,900,,,\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records[0].dl_bitrate, Some(700.0));
        assert_eq!(ds.duplicates_dropped, 1);
    }

    #[test]
    fn decreasing_timestamp_rejected() {
        assert!(matches!(parse("10,LTE,D,1,,,\n9,LTE,D,1,,,\n"), Err(IngestError::MalformedRow { line: 3, .. })));
    }

    #[test]
    fn negative_bitrate_rejected() {
        assert!(matches!(parse("10,LTE,D,-1,,,\n"), Err(IngestError::MalformedRow { .. })));
    }

    #[test]
    fn mixed_modes_need_explicit_tag() {
        let body = "10,LTE,D,1,,,\n11,NR,D,1,,,\n";
        assert!(matches!(parse(body), Err(IngestError::ConflictingTags(_))));
        let text = format!("{HEADER}{body}");
        let tags = SessionTags { network_mode: Some(NetworkMode::Nr), ..Default::default() };
        let ds = parse_reader(text.as_bytes(), &Schema::default(), tags).unwrap();
        assert_eq!(ds.network_mode, NetworkMode::Nr);
    }

    #[test]
    fn tags_from_path() {
        let t = SessionTags::from_path(Path::new("data/5G/Download/Driving/B_2019.csv"));
        assert_eq!(t.application, Some(Application::Downloading));
        assert_eq!(t.mobility, Some(Mobility::Driving));
        let t = SessionTags::from_path(Path::new("data/4G/Netflix/Static/A.csv"));
        assert_eq!(t.application, Some(Application::Streaming));
    }
}
