//! Squared-error gradient boosting over depth-limited regression trees with
//! exact greedy splits. Used only to score features: the importance of a
//! feature is the total SSE reduction of the splits made on it.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Row fraction drawn without replacement per tree; 1.0 uses every row.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            trees: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    /// Parallel to the input columns; sums to 1 unless `constant_target`.
    pub scores: Vec<f64>,
    /// Unnormalized gain totals.
    pub raw_gain: Vec<f64>,
    pub constant_target: bool,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best SSE-reducing split of `rows` (a node) across all features.
///
/// `sorted[f]` lists the node's rows ordered by feature f. Features are
/// scanned in index order and a later candidate must strictly beat the
/// incumbent, so ties go to the lower index.
fn best_split(columns: &[&[f64]], residual: &[f64], sorted: &[Vec<usize>], min_leaf: usize) -> Option<Split> {
    let n = sorted.first().map_or(0, Vec::len);
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let total: f64 = sorted[0].iter().map(|&i| residual[i]).sum();
    let parent = total * total / n as f64;
    let mut best: Option<Split> = None;
    for (f, order) in sorted.iter().enumerate() {
        let x = columns[f];
        let mut left = 0.0;
        for k in 0..n - 1 {
            left += residual[order[k]];
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let (a, b) = (x[order[k]], x[order[k + 1]]);
            if a == b {
                continue;
            }
            let right = total - left;
            let gain = left * left / n_left as f64 + right * right / n_right as f64 - parent;
            if gain > best.map_or(1e-12, |s| s.gain) {
                best = Some(Split { feature: f, threshold: 0.5 * (a + b), gain });
            }
        }
    }
    best
}

enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

impl Node {
    fn predict(&self, columns: &[&[f64]], row: usize) -> f64 {
        match self {
            Node::Leaf(v) => *v,
            Node::Split { feature, threshold, left, right } => {
                if columns[*feature][row] < *threshold {
                    left.predict(columns, row)
                } else {
                    right.predict(columns, row)
                }
            }
        }
    }
}

struct TreeBuilder<'a> {
    columns: &'a [&'a [f64]],
    residual: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    learning_rate: f64,
    gains: &'a mut [f64],
}

impl TreeBuilder<'_> {
    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> Node {
        let split = if depth < self.max_depth {
            best_split(self.columns, self.residual, &sorted, self.min_leaf)
        } else {
            None
        };
        match split {
            None => {
                let rows = &sorted[0];
                let mean = rows.iter().map(|&i| self.residual[i]).sum::<f64>() / rows.len() as f64;
                Node::Leaf(self.learning_rate * mean)
            }
            Some(s) => {
                self.gains[s.feature] += s.gain;
                let x = self.columns[s.feature];
                let (mut left, mut right) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
                for order in sorted {
                    let (l, r): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| x[i] < s.threshold);
                    left.push(l);
                    right.push(r);
                }
                Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: Box::new(self.grow(left, depth + 1)),
                    right: Box::new(self.grow(right, depth + 1)),
                }
            }
        }
    }
}

/// Fits the boosted ensemble and returns per-column gain importance.
pub fn fit_gbt_importance(columns: &[&[f64]], y: &[f64], config: &GbtConfig) -> Result<Importance, FeatureError> {
    let n = y.len();
    if n < 2 {
        return Err(FeatureError::TooFewRows(n));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(FeatureError::ShapeMismatch);
    }
    let f = columns.len();
    let mut gains = vec![0.0; f];
    let first = y[0];
    if y.iter().all(|&v| v == first) {
        return Ok(Importance { scores: vec![0.0; f], raw_gain: gains, constant_target: true });
    }

    let presorted: Vec<Vec<usize>> = columns
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut residual = vec![0.0; n];
    if f == 0 {
        return Ok(Importance { scores: Vec::new(), raw_gain: gains, constant_target: false });
    }

    for _ in 0..config.trees {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        let sorted: Vec<Vec<usize>> = if config.subsample < 1.0 {
            let m = ((n as f64 * config.subsample).round() as usize).clamp(2, n);
            let mut keep = vec![false; n];
            for i in sample(&mut rng, n, m) {
                keep[i] = true;
            }
            presorted.iter().map(|o| o.iter().copied().filter(|&i| keep[i]).collect()).collect()
        } else {
            presorted.clone()
        };
        let mut builder = TreeBuilder {
            columns,
            residual: &residual,
            max_depth: config.max_depth,
            min_leaf: config.min_samples_leaf,
            learning_rate: config.learning_rate,
            gains: &mut gains,
        };
        let tree = builder.grow(sorted, 0);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += tree.predict(columns, i);
        }
    }

    let total: f64 = gains.iter().sum();
    let scores = if total > 0.0 { gains.iter().map(|g| g / total).collect() } else { vec![0.0; f] };
    Ok(Importance { scores, raw_gain: gains, constant_target: false })
}
