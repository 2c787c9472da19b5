use super::EvalError;

/// Mean absolute error over paired values.
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64, EvalError> {
    if pred.len() != actual.len() {
        return Err(EvalError::ShapeMismatch);
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mape {
    pub percent: f64,
    pub excluded: usize,
}

/// Mean absolute percentage error over points with |actual| >= epsilon.
pub fn mape(pred: &[f64], actual: &[f64], epsilon: f64) -> Result<Mape, EvalError> {
    if pred.len() != actual.len() {
        return Err(EvalError::ShapeMismatch);
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for (p, a) in pred.iter().zip(actual) {
        if a.abs() >= epsilon {
            total += (p - a).abs() / a.abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(EvalError::AllExcluded);
    }
    Ok(Mape { percent: 100.0 * total / used as f64, excluded: pred.len() - used })
}
