use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    ZScore,
    MinMax,
    None,
}

/// A fitted, invertible per-column scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalizer {
    Identity,
    /// Population standard deviation.
    ZScore { mean: f64, std: f64 },
    /// Out-of-range inputs map outside [0, 1] unless `clip` is set.
    MinMax { lo: f64, hi: f64, clip: bool },
    /// Fitted on a constant column: every input maps to 0, inversion
    /// returns the constant.
    Degenerate { value: f64 },
}

impl Normalizer {
    /// Fits on a column. Fewer than two distinct values yields `Degenerate`.
    pub fn fit(values: &[f64], kind: NormKind, clip: bool) -> Normalizer {
        if kind == NormKind::None {
            return Normalizer::Identity;
        }
        let Some(&first) = values.first() else {
            return Normalizer::Degenerate { value: 0.0 };
        };
        if values.iter().all(|&v| v == first) {
            return Normalizer::Degenerate { value: first };
        }
        match kind {
            NormKind::ZScore => {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                Normalizer::ZScore { mean, std: var.sqrt() }
            }
            NormKind::MinMax => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Normalizer::MinMax { lo, hi, clip }
            }
            NormKind::None => unreachable!(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Normalizer::Degenerate { .. })
    }

    pub fn apply<T: Scalar>(&self, x: T) -> T {
        match *self {
            Normalizer::Identity => x,
            Normalizer::ZScore { mean, std } => (x - T::of(mean)) / T::of(std),
            Normalizer::MinMax { lo, hi, clip } => {
                let y = (x - T::of(lo)) / T::of(hi - lo);
                if clip {
                    y.max(T::zero()).min(T::one())
                } else {
                    y
                }
            }
            Normalizer::Degenerate { .. } => T::zero(),
        }
    }

    pub fn invert<T: Scalar>(&self, y: T) -> T {
        match *self {
            Normalizer::Identity => y,
            Normalizer::ZScore { mean, std } => y * T::of(std) + T::of(mean),
            Normalizer::MinMax { lo, hi, .. } => y * T::of(hi - lo) + T::of(lo),
            Normalizer::Degenerate { value } => T::of(value),
        }
    }

    /// Factor converting an error measured on the normalized scale back to
    /// original units.
    pub fn scale(&self) -> f64 {
        match *self {
            Normalizer::Identity => 1.0,
            Normalizer::ZScore { std, .. } => std,
            Normalizer::MinMax { lo, hi, .. } => hi - lo,
            Normalizer::Degenerate { .. } => 0.0,
        }
    }

    pub fn apply_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minmax_endpoints() {
        let n = Normalizer::fit(&[0.0, 5.0, 10.0], NormKind::MinMax, true);
        assert_eq!(n.apply_all(&[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn zscore_three_points() {
        let n = Normalizer::fit(&[1.0, 2.0, 3.0], NormKind::ZScore, false);
        let out = n.apply_all(&[1.0, 2.0, 3.0]);
        // population sigma = sqrt(2/3)
        let expect = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((out[0] + expect).abs() < 1e-9);
        assert!(out[1].abs() < 1e-12);
        assert!((out[2] - expect).abs() < 1e-9);
        assert!((expect - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_column_is_flagged_and_maps_to_zero() {
        let n = Normalizer::fit(&[7.0, 7.0, 7.0], NormKind::MinMax, true);
        assert!(n.is_degenerate());
        assert_eq!(n.apply_all(&[7.0, 7.0, 7.0]), vec![0.0; 3]);
        assert_eq!(n.invert(0.0), 7.0);
    }

    #[test]
    fn clipping_only_outside_fitted_range() {
        let n = Normalizer::fit(&[0.0, 10.0], NormKind::MinMax, true);
        assert_eq!(n.apply(20.0), 1.0);
        assert_eq!(n.apply(-5.0), 0.0);
        let passthrough = Normalizer::fit(&[0.0, 10.0], NormKind::MinMax, false);
        assert_eq!(passthrough.apply(20.0), 2.0);
    }

    proptest! {
        #[test]
        fn round_trip_on_fitted_data(values in proptest::collection::vec(-1e4f64..1e4, 2..40), z in any::<bool>()) {
            let kind = if z { NormKind::ZScore } else { NormKind::MinMax };
            let n = Normalizer::fit(&values, kind, true);
            prop_assume!(!n.is_degenerate());
            for &v in &values {
                let back = n.invert(n.apply(v));
                prop_assert!((back - v).abs() <= 1e-9 * (1.0 + v.abs()));
            }
            if z {
                let out = n.apply_all(&values);
                let m = out.iter().sum::<f64>() / out.len() as f64;
                let s = (out.iter().map(|x| (x - m).powi(2)).sum::<f64>() / out.len() as f64).sqrt();
                prop_assert!(m.abs() < 1e-9);
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
