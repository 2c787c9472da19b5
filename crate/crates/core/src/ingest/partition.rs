use std::collections::BTreeMap;

use super::record::{Application, Mobility, NetworkMode, SessionDataset};
use super::IngestError;

/// Merges sessions into one dataset per (network mode, application) pair.
///
/// Inputs are reduced in source-path order, so the result does not depend on
/// the order in which files were parsed. Each input keeps its own segments.
pub fn partition(
    datasets: Vec<SessionDataset>,
) -> Result<BTreeMap<(NetworkMode, Application), SessionDataset>, IngestError> {
    let mut sorted = datasets;
    sorted.sort_by(|a, b| a.source_files.cmp(&b.source_files));

    let mut out: BTreeMap<(NetworkMode, Application), SessionDataset> = BTreeMap::new();
    for ds in sorted {
        check_tags(&ds)?;
        let key = (ds.network_mode, ds.application);
        let merged = out.entry(key).or_insert_with(|| SessionDataset {
            records: Vec::new(),
            network_mode: ds.network_mode,
            application: ds.application,
            mobility: Mobility::Merged,
            source_files: Vec::new(),
            segments: Vec::new(),
            duplicates_dropped: 0,
        });
        let offset = merged.records.len();
        merged
            .segments
            .extend(ds.segments.iter().map(|s| (s.start + offset)..(s.end + offset)));
        merged.records.extend(ds.records);
        merged.source_files.extend(ds.source_files);
        merged.duplicates_dropped += ds.duplicates_dropped;
    }
    Ok(out)
}

/// A dataset tagged with one mode must not contain rows of the other mode.
fn check_tags(ds: &SessionDataset) -> Result<(), IngestError> {
    let other = match ds.network_mode {
        NetworkMode::Lte => Some(NetworkMode::Nr),
        NetworkMode::Nr => Some(NetworkMode::Lte),
        NetworkMode::Other => None,
    };
    let label = ds.source_files.join(",");
    match other {
        Some(o) if ds.records.iter().any(|r| r.network_mode == o) && !ds.records.iter().any(|r| r.network_mode == ds.network_mode) => {
            Err(IngestError::ConflictingTags(format!(
                "{label}: tagged {} but rows are {}",
                ds.network_mode, o
            )))
        }
        None => {
            let modes: std::collections::BTreeSet<_> = ds
                .records
                .iter()
                .map(|r| r.network_mode)
                .filter(|m| *m != NetworkMode::Other)
                .collect();
            if modes.len() > 1 {
                Err(IngestError::ConflictingTags(format!("{label}: rows report both 4G and 5G")))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}
