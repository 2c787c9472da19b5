use crate::Scalar;

use super::FeatureError;

/// Pearson product-moment correlation.
pub fn pearson_r<T: Scalar>(x: &[T], y: &[T]) -> Result<T, FeatureError> {
    if x.len() != y.len() {
        return Err(FeatureError::ShapeMismatch);
    }
    if x.len() < 2 {
        return Err(FeatureError::TooFewRows(x.len()));
    }
    let n = T::of(x.len() as f64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(FeatureError::ConstantSeries);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Average ranks (1-based), ties share the mean rank.
pub fn ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = T::of((i + j) as f64 / 2.0 + 1.0);
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman_rho<T: Scalar>(x: &[T], y: &[T]) -> Result<T, FeatureError> {
    pearson_r(&ranks(x), &ranks(y))
}
