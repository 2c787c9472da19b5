use serde::{Deserialize, Serialize};

use super::SearchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dim {
    Continuous { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Choice { values: Vec<f64> },
}

impl Dim {
    /// Unit-interval coordinate to a value.
    pub fn decode(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Dim::Continuous { lo, hi } => lo + u * (hi - lo),
            Dim::LogUniform { lo, hi } => match u {
                0.0 => *lo,
                1.0 => *hi,
                _ => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
            },
            Dim::Integer { lo, hi } => (*lo as f64 + (u * (hi - lo) as f64).round()).min(*hi as f64),
            Dim::Choice { values } => values[((u * (values.len() - 1) as f64).round() as usize).min(values.len() - 1)],
        }
    }

    /// Inverse of [`Dim::decode`] for values in the domain.
    pub fn encode(&self, v: f64) -> f64 {
        let span = |a: f64, b: f64| if b > a { (v - a) / (b - a) } else { 0.0 };
        let u = match self {
            Dim::Continuous { lo, hi } => span(*lo, *hi),
            Dim::LogUniform { lo, hi } => {
                if hi > lo {
                    (v.ln() - lo.ln()) / (hi.ln() - lo.ln())
                } else {
                    0.0
                }
            }
            Dim::Integer { lo, hi } => span(*lo as f64, *hi as f64),
            Dim::Choice { values } => {
                let i = values.iter().position(|x| *x == v).unwrap_or(0);
                if values.len() > 1 {
                    i as f64 / (values.len() - 1) as f64
                } else {
                    0.0
                }
            }
        };
        u.clamp(0.0, 1.0)
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Dim::Integer { .. } | Dim::Choice { .. })
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Dim::Continuous { lo, hi } if lo.is_finite() && hi.is_finite() && lo <= hi => Ok(()),
            Dim::LogUniform { lo, hi } if *lo > 0.0 && lo <= hi && hi.is_finite() => Ok(()),
            Dim::Integer { lo, hi } if lo <= hi => Ok(()),
            Dim::Choice { values } if !values.is_empty() => Ok(()),
            other => Err(format!("bad dimension {other:?}")),
        }
    }
}

/// Named box of dimensions searched on the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub names: Vec<String>,
    pub dims: Vec<Dim>,
}

impl ParamSpace {
    pub fn new(dims: Vec<(&str, Dim)>) -> Result<Self, SearchError> {
        for (n, d) in &dims {
            d.validate().map_err(|e| SearchError::InvalidSpace(format!("{n}: {e}")))?;
        }
        Ok(ParamSpace { names: dims.iter().map(|d| d.0.to_string()).collect(), dims: dims.into_iter().map(|d| d.1).collect() })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn decode(&self, u: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(u).map(|(d, &x)| d.decode(x)).collect()
    }

    pub fn encode(&self, v: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(v).map(|(d, &x)| d.encode(x)).collect()
    }

    /// Snaps a unit-cube point onto the grid implied by the discrete dims.
    pub fn snap(&self, u: &[f64]) -> Vec<f64> {
        self.encode(&self.decode(u))
    }
}
