use super::record::SessionDataset;

pub const DEFAULT_MAX_GAP_SECONDS: i64 = 30;

/// Places every segment on a regular grid of step `period` seconds.
///
/// A gap between consecutive samples larger than `max_gap` starts a new
/// segment. Each grid point takes the last observation at or before it.
pub fn resample_uniform(ds: &SessionDataset, period: i64, max_gap: i64) -> SessionDataset {
    assert!(period > 0, "resample period must be positive");
    let mut records = Vec::new();
    let mut segments = Vec::new();

    for seg in &ds.segments {
        let rows = &ds.records[seg.clone()];
        let mut start = 0;
        while start < rows.len() {
            let mut end = start + 1;
            while end < rows.len() && rows[end].timestamp - rows[end - 1].timestamp <= max_gap {
                end += 1;
            }
            let run = &rows[start..end];
            let first = records.len();
            let t0 = run[0].timestamp;
            let t_last = run[run.len() - 1].timestamp;
            let mut cursor = 0;
            let mut t = t0;
            while t <= t_last {
                while cursor + 1 < run.len() && run[cursor + 1].timestamp <= t {
                    cursor += 1;
                }
                let mut r = run[cursor].clone();
                r.timestamp = t;
                records.push(r);
                t += period;
            }
            segments.push(first..records.len());
            start = end;
        }
    }

    SessionDataset {
        records,
        network_mode: ds.network_mode,
        application: ds.application,
        mobility: ds.mobility,
        source_files: ds.source_files.clone(),
        segments,
        duplicates_dropped: ds.duplicates_dropped,
    }
}
