use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::SearchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    /// Length scales tried by marginal-likelihood maximization, in unit-cube units.
    pub length_scales: Vec<f64>,
    /// Observation noise variance on the standardized targets.
    pub noise: f64,
    pub jitter: f64,
    pub max_jitter: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            length_scales: vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0],
            noise: 0.0,
            jitter: 1e-10,
            max_jitter: 1e-4,
        }
    }
}

/// Squared-exponential GP fitted to standardized targets.
#[derive(Debug, Clone)]
pub struct Gp {
    x: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    jitter: f64,
    pub length_scale: f64,
    pub amplitude: f64,
    pub log_marginal: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn kernel_matrix(x: &[Vec<f64>], ls: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| (-sq_dist(&x[i], &x[j]) / (2.0 * ls * ls)).exp())
}

/// Cholesky with escalating diagonal jitter; returns the factor and the jitter used.
fn factor(k: &DMatrix<f64>, noise: f64, cfg: &GpConfig) -> Result<(Cholesky<f64, Dyn>, f64), SearchError> {
    let mut jitter = cfg.jitter;
    loop {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += noise + jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        if jitter >= cfg.max_jitter {
            return Err(SearchError::SingularKernel(jitter));
        }
        jitter *= 10.0;
    }
}

impl Gp {
    pub fn fit(x: &[Vec<f64>], y: &[f64], cfg: &GpConfig) -> Result<Gp, SearchError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(SearchError::InvalidConfig("GP needs matching non-empty inputs".into()));
        }
        if cfg.length_scales.is_empty() || cfg.length_scales.iter().any(|l| !(*l > 0.0)) {
            return Err(SearchError::InvalidConfig("length scales must be positive".into()));
        }
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_scale = if sd > 1e-12 { sd } else { 1.0 };
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));

        let mut best: Option<Gp> = None;
        for &ls in &cfg.length_scales {
            let k = kernel_matrix(x, ls);
            let Ok((chol, jitter)) = factor(&k, cfg.noise, cfg) else { continue };
            let a = chol.solve(&ys);
            // amplitude at its closed-form optimum
            let amp = (ys.dot(&a) / n).max(1e-12);
            let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
            let lml = -0.5 * n * amp.ln() - 0.5 * log_det - 0.5 * n - 0.5 * n * (2.0 * std::f64::consts::PI).ln();
            if best.as_ref().map_or(true, |b| lml > b.log_marginal) {
                best = Some(Gp {
                    x: x.to_vec(),
                    chol,
                    alpha: a,
                    y_mean,
                    y_scale,
                    jitter,
                    length_scale: ls,
                    amplitude: amp,
                    log_marginal: lml,
                });
            }
        }
        best.ok_or(SearchError::SingularKernel(cfg.max_jitter))
    }

    /// Posterior mean and standard deviation in the original target units.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let ls = self.length_scale;
        let kq = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| (-sq_dist(xi, q) / (2.0 * ls * ls)).exp()));
        let mean = kq.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&kq).expect("triangular factor");
        let mut var = (1.0 - v.dot(&v)).max(0.0);
        // variance at the jitter floor is numerical, not posterior uncertainty
        if var <= 10.0 * self.jitter {
            var = 0.0;
        }
        let var = var * self.amplitude;
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}

/// Expected improvement below `best` for a minimization problem.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let imp = best - mean;
    if sd <= 1e-12 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    (imp * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}
