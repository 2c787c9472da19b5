use serde::{Deserialize, Serialize};

use super::weights::NetworkWeights;
use super::NnError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: NetworkWeights<T>,
    pub v: NetworkWeights<T>,
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(like: &NetworkWeights<T>, config: AdamConfig) -> Self {
        AdamState { m: like.zeros_like(), v: like.zeros_like(), t: 0, config }
    }
}

/// One bias-corrected Adam update. A gradient with a non-finite entry is
/// refused and leaves both weights and state untouched.
pub fn adam_step<T: Scalar>(
    weights: &mut NetworkWeights<T>,
    grads: &NetworkWeights<T>,
    state: &mut AdamState<T>,
) -> Result<(), NnError> {
    if grads.len() != weights.len() || state.m.len() != weights.len() {
        return Err(NnError::ShapeMismatch("gradient and weight sizes differ".into()));
    }
    if !grads.all_finite() {
        return Err(NnError::NonFiniteGradient);
    }
    state.t += 1;
    let c = state.config;
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let one = T::one();
    let corr1 = T::of(1.0 - c.beta1.powi(state.t as i32));
    let corr2 = T::of(1.0 - c.beta2.powi(state.t as i32));
    let (lr, eps) = (T::of(c.learning_rate), T::of(c.epsilon));
    let it = weights.params_mut().zip(grads.params()).zip(state.m.params_mut().zip(state.v.params_mut()));
    for ((w, &g), (m, v)) in it {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let mhat = *m / corr1;
        let vhat = *v / corr2;
        *w -= lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(())
}
