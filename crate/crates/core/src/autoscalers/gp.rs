//! One-dimensional Gaussian-process regression and expected improvement
//! over integer candidates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpParams {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        Self {
            length_scale: 1.5,
            signal_variance: 1.0,
            noise: 1e-3,
        }
    }
}

pub fn rbf(a: f64, b: f64, p: &GpParams) -> f64 {
    let d = (a - b) / p.length_scale;
    p.signal_variance * (-0.5 * d * d).exp()
}

/// Lower-triangular Cholesky factor of a row-major symmetric matrix.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn forward(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

fn backward(l: &[f64], n: usize, y: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Posterior over a fixed observation set. The prior mean is the mean of
/// the observed values.
pub struct Posterior {
    xs: Vec<f64>,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    prior_mean: f64,
    params: GpParams,
}

impl Posterior {
    pub fn fit(obs: &[(f64, f64)], params: GpParams) -> Option<Self> {
        let n = obs.len();
        if n == 0 {
            return None;
        }
        let prior_mean = obs.iter().map(|o| o.1).sum::<f64>() / n as f64;
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = rbf(obs[i].0, obs[j].0, &params);
            }
            k[i * n + i] += params.noise;
        }
        let chol = cholesky(&k, n)?;
        let centered: Vec<f64> = obs.iter().map(|o| o.1 - prior_mean).collect();
        let alpha = backward(&chol, n, &forward(&chol, n, &centered));
        Some(Self {
            xs: obs.iter().map(|o| o.0).collect(),
            chol,
            alpha,
            prior_mean,
            params,
        })
    }

    /// (mean, standard deviation) at `x`.
    pub fn predict(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        let ks: Vec<f64> = self.xs.iter().map(|&xi| rbf(x, xi, &self.params)).collect();
        let mean = self.prior_mean + ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let v = forward(&self.chol, n, &ks);
        let var = (self.params.signal_variance - v.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        (mean, var.sqrt())
    }
}

/// Expected improvement below `best` (minimization).
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let imp = best - mean;
    if sd <= 1e-12 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    imp * norm_cdf(z) + sd * norm_pdf(z)
}

/// Candidate with the largest EI; ties go to the smallest candidate.
pub fn argmax_ei(obs: &[(f64, f64)], candidates: &[i64], params: GpParams) -> Option<i64> {
    let post = Posterior::fit(obs, params)?;
    let best = obs.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let mut pick: Option<(i64, f64)> = None;
    for &c in candidates {
        let (m, s) = post.predict(c as f64);
        let ei = expected_improvement(m, s, best);
        if pick.is_none_or(|(_, b)| ei > b) {
            pick = Some((c, ei));
        }
    }
    pick.map(|p| p.0)
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
