use ndarray::{Array3, ArrayView3, Zip};

use super::NnError;
use crate::Scalar;

/// Mean absolute error and its subgradient sign(pred - target) / N.
pub fn mae_loss<T: Scalar>(pred: ArrayView3<T>, target: ArrayView3<T>) -> Result<(T, Array3<T>), NnError> {
    if pred.dim() != target.dim() {
        return Err(NnError::ShapeMismatch(format!("pred {:?} vs target {:?}", pred.dim(), target.dim())));
    }
    let n = pred.len();
    if n == 0 {
        return Err(NnError::NoData);
    }
    let inv = T::one() / T::of(n as f64);
    let mut total = T::zero();
    let mut grad = Array3::zeros(pred.dim());
    Zip::from(&mut grad).and(&pred).and(&target).for_each(|g, &p, &t| {
        let d = p - t;
        total += d.abs();
        *g = if d > T::zero() {
            inv
        } else if d < T::zero() {
            -inv
        } else {
            T::zero()
        };
    });
    Ok((total * inv, grad))
}
