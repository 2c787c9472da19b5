use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Column-major numeric table produced by preprocessing: one row per
/// timestamp, no missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub timestamps: Vec<i64>,
    pub segments: Vec<Range<usize>>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Frame {
    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.columns[i].as_slice())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// A frame restricted to the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Option<Frame> {
        let columns = names
            .iter()
            .map(|n| self.column(n).map(<[f64]>::to_vec))
            .collect::<Option<Vec<_>>>()?;
        Some(Frame {
            timestamps: self.timestamps.clone(),
            segments: self.segments.clone(),
            names: names.to_vec(),
            columns,
        })
    }

    /// Rows `range`, with segments clipped to it and re-based.
    pub fn slice_rows(&self, range: Range<usize>) -> Frame {
        let segments = self
            .segments
            .iter()
            .filter_map(|s| {
                let start = s.start.max(range.start);
                let end = s.end.min(range.end);
                (start < end).then(|| (start - range.start)..(end - range.start))
            })
            .collect();
        Frame {
            timestamps: self.timestamps[range.clone()].to_vec(),
            segments,
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[range.clone()].to_vec()).collect(),
        }
    }
}
