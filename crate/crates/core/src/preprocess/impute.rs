use serde::{Deserialize, Serialize};

use super::PreprocessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    Zero,
    Mean,
    Median,
    ForwardFill,
    BackwardFill,
}

/// Imputation with its statistic frozen from training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "value", rename_all = "snake_case")]
pub enum FittedImpute {
    Zero,
    Mean(f64),
    Median(f64),
    ForwardFill,
    BackwardFill,
}

impl FittedImpute {
    pub fn fit(column: &[Option<f64>], method: ImputeMethod) -> Result<FittedImpute, PreprocessError> {
        let present: Vec<f64> = column.iter().flatten().copied().collect();
        match method {
            ImputeMethod::Zero => Ok(FittedImpute::Zero),
            ImputeMethod::ForwardFill => Ok(FittedImpute::ForwardFill),
            ImputeMethod::BackwardFill => Ok(FittedImpute::BackwardFill),
            ImputeMethod::Mean | ImputeMethod::Median if present.is_empty() => Err(PreprocessError::AllMissing),
            ImputeMethod::Mean => Ok(FittedImpute::Mean(present.iter().sum::<f64>() / present.len() as f64)),
            ImputeMethod::Median => Ok(FittedImpute::Median(median(present))),
        }
    }

    /// Fills every missing entry; present values pass through unchanged.
    /// Fill runs with nothing to carry from fall back to zero.
    pub fn apply(&self, column: &[Option<f64>]) -> Vec<f64> {
        match *self {
            FittedImpute::Zero => column.iter().map(|v| v.unwrap_or(0.0)).collect(),
            FittedImpute::Mean(c) | FittedImpute::Median(c) => column.iter().map(|v| v.unwrap_or(c)).collect(),
            FittedImpute::ForwardFill => {
                let mut last = 0.0;
                column
                    .iter()
                    .map(|v| {
                        if let Some(x) = v {
                            last = *x;
                        }
                        last
                    })
                    .collect()
            }
            FittedImpute::BackwardFill => {
                let mut next = 0.0;
                let mut out: Vec<f64> = column
                    .iter()
                    .rev()
                    .map(|v| {
                        if let Some(x) = v {
                            next = *x;
                        }
                        next
                    })
                    .collect();
                out.reverse();
                out
            }
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One-shot imputation of a single column.
pub fn impute(column: &[Option<f64>], method: ImputeMethod) -> Result<Vec<f64>, PreprocessError> {
    Ok(FittedImpute::fit(column, method)?.apply(column))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forward_fill_carries() {
        assert_eq!(impute(&[Some(1.0), None, Some(3.0)], ImputeMethod::ForwardFill).unwrap(), vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn forward_fill_leading_gap_is_zero() {
        assert_eq!(impute(&[None, Some(2.0), None], ImputeMethod::ForwardFill).unwrap(), vec![0.0, 2.0, 2.0]);
    }

    #[test]
    fn backward_fill_trailing_gap_is_zero() {
        assert_eq!(impute(&[None, Some(2.0), None], ImputeMethod::BackwardFill).unwrap(), vec![2.0, 2.0, 0.0]);
    }

    #[test]
    fn median_of_present_values() {
        assert_eq!(impute(&[Some(1.0), None, Some(3.0)], ImputeMethod::Median).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn mean_and_median_need_a_value() {
        assert!(matches!(impute(&[None, None], ImputeMethod::Mean), Err(PreprocessError::AllMissing)));
        assert!(matches!(impute(&[None], ImputeMethod::Median), Err(PreprocessError::AllMissing)));
        assert_eq!(impute(&[None, None], ImputeMethod::Zero).unwrap(), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn nothing_missing_survives(col in proptest::collection::vec(proptest::option::of(-100.0f64..100.0), 1..30), m in 0usize..5) {
            let method = [ImputeMethod::Zero, ImputeMethod::Mean, ImputeMethod::Median, ImputeMethod::ForwardFill, ImputeMethod::BackwardFill][m];
            match impute(&col, method) {
                Ok(out) => {
                    prop_assert_eq!(out.len(), col.len());
                    for (o, c) in out.iter().zip(&col) {
                        prop_assert!(o.is_finite());
                        if let Some(x) = c { prop_assert_eq!(o, x); }
                    }
                }
                Err(_) => prop_assert!(col.iter().all(Option::is_none)),
            }
        }
    }
}
