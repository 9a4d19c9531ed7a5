//! RBF-kernel regressors for daily energy not served.
//!
//! The epsilon-insensitive SVR dual is solved by SMO with second-order working
//! set selection. Kernel ridge regression is the closed-form alternative.
//! Targets are standardized before fitting.

use serde::{Deserialize, Serialize};

use crate::error::{AdequacyError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    #[default]
    Svr,
    KernelRidge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressorParams {
    pub kind: RegressorKind,
    /// Box constraint of the SVR dual.
    pub c: f64,
    /// Half-width of the insensitive tube, in standardized target units.
    pub epsilon: f64,
    /// RBF width; `None` uses `1 / (n_features * var(X))`.
    pub gamma: Option<f64>,
    /// Ridge penalty for kernel ridge regression.
    pub ridge: f64,
    /// SMO stops when the maximal KKT violation falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RegressorParams {
    fn default() -> Self {
        Self {
            kind: RegressorKind::Svr,
            c: 1000.0,
            epsilon: 0.1,
            gamma: Some(1e-4),
            ridge: 0.1,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsRegressor {
    pub kind: RegressorKind,
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub target_mean: f64,
    pub target_scale: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl EnsRegressor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let f: f64 =
            self.support.iter().zip(&self.coef).map(|(s, c)| c * (-self.gamma * sq_dist(s, x)).exp()).sum::<f64>()
                + self.intercept;
        self.target_mean + self.target_scale * f
    }

    pub fn train<X: AsRef<[f64]>>(x: &[X], y: &[f64], params: &RegressorParams) -> Result<Self> {
        if x.len() != y.len() {
            return Err(AdequacyError::LengthMismatch { left: x.len(), right: y.len() });
        }
        if x.len() < 2 {
            return Err(AdequacyError::Untrainable(format!("{} curtailed training days, need at least 2", x.len())));
        }
        if !(params.c > 0.0 && params.epsilon >= 0.0 && params.ridge > 0.0 && params.tolerance > 0.0) {
            return Err(AdequacyError::Config(
                "regressor: c, ridge and tolerance must be positive, epsilon nonnegative".into(),
            ));
        }
        let n = x.len();
        let d = x[0].as_ref().len();
        let gamma = match params.gamma {
            Some(g) if g > 0.0 => g,
            Some(g) => return Err(AdequacyError::Config(format!("regressor: gamma must be positive, got {g}"))),
            None => {
                let all = x.iter().flat_map(|r| r.as_ref().iter().copied());
                let count = (n * d) as f64;
                let mean = all.clone().sum::<f64>() / count;
                let var = all.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
                if var > 0.0 {
                    1.0 / (d as f64 * var)
                } else {
                    1.0
                }
            }
        };
        let target_mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - target_mean).powi(2)).sum::<f64>() / n as f64;
        let target_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let z: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_scale).collect();

        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            kernel[i * n + i] = 1.0;
            for j in 0..i {
                let k = (-gamma * sq_dist(x[i].as_ref(), x[j].as_ref())).exp();
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }
        let (beta, intercept) = match params.kind {
            RegressorKind::Svr => smo(&kernel, &z, params),
            RegressorKind::KernelRidge => (ridge_solve(kernel, &z, params.ridge), 0.0),
        };
        let (support, coef) =
            x.iter().zip(beta).filter(|(_, b)| *b != 0.0).map(|(r, b)| (r.as_ref().to_vec(), b)).unzip();
        Ok(Self { kind: params.kind, gamma, support, coef, intercept, target_mean, target_scale })
    }
}

/// Solve the epsilon-SVR dual over `2n` variables; returns per-sample
/// coefficients and the intercept.
fn smo(kernel: &[f64], z: &[f64], params: &RegressorParams) -> (Vec<f64>, f64) {
    const TAU: f64 = 1e-12;
    let n = z.len();
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |a: usize, b: usize| sign(a) * sign(b) * kernel[(a % n) * n + b % n];
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> =
        (0..l).map(|t| if t < n { params.epsilon - z[t] } else { params.epsilon + z[t - n] }).collect();

    let mut iterations = 0;
    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            let v = if t < n {
                if alpha[t] < c {
                    -grad[t]
                } else {
                    continue;
                }
            } else if alpha[t] > 0.0 {
                grad[t]
            } else {
                continue;
            };
            if v >= gmax {
                gmax = v;
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        // j: second-order choice in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..l {
            let (v, grad_diff, quad) = if t < n {
                if alpha[t] <= 0.0 {
                    continue;
                }
                (grad[t], gmax + grad[t], 2.0 - 2.0 * sign(i) * q(i, t))
            } else {
                if alpha[t] >= c {
                    continue;
                }
                (-grad[t], gmax - grad[t], 2.0 + 2.0 * sign(i) * q(i, t))
            };
            gmax2 = gmax2.max(v);
            if grad_diff > 0.0 {
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < params.tolerance || j == usize::MAX {
            break;
        }
        iterations += 1;
        if iterations > params.max_iterations {
            log::warn!("svr: stopped after {} iterations with violation {:e}", params.max_iterations, gmax + gmax2);
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (2.0 + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (si, sj) = (sign(i), sign(j));
        let (ri, rj) = (&kernel[(i % n) * n..(i % n + 1) * n], &kernel[(j % n) * n..(j % n + 1) * n]);
        for (t, g) in grad.iter_mut().enumerate() {
            let k = t % n;
            *g += sign(t) * (si * ri[k] * di + sj * rj[k] * dj);
        }
    }

    // rho from free variables, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { 0.5 * (ub + lb) };
    let beta = (0..n).map(|t| alpha[t] - alpha[t + n]).collect();
    (beta, -rho)
}

/// Solve `(K + ridge I) beta = z` by Cholesky factorization.
fn ridge_solve(mut a: Vec<f64>, z: &[f64], ridge: f64) -> Vec<f64> {
    let n = z.len();
    for i in 0..n {
        a[i * n + i] += ridge;
    }
    // lower factor in place
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut w = z.to_vec();
    for i in 0..n {
        for k in 0..i {
            w[i] -= a[i * n + k] * w[k];
        }
        w[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            w[i] -= a[k * n + i] * w[k];
        }
        w[i] /= a[i * n + i];
    }
    w
}
