//! Gaussian-process regression with a Matern-5/2 ARD kernel: exact posterior
//! inference through a Cholesky factor, log marginal likelihood with its
//! analytic gradient, and MAP hyperparameter fitting under log-normal priors.
//!
//! Observation noise is treated purely as numerical jitter (the attack
//! objective is noiseless); `fit` escalates the jitter by factors of ten up
//! to 1e-4 before reporting a factorization failure.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::lbfgs::{self, LbfgsConfig};
use crate::linalg::CholeskyFactor;
use crate::math::{exp, ln, sqrt, TAU};

const SQRT_5: f64 = 2.236_067_977_499_79;
/// Jitter ceiling for Cholesky escalation.
const MAX_JITTER: f64 = 1e-4;

/// Kernel hyperparameters: signal variance, one lengthscale per input
/// dimension, and the (jitter) noise variance. All strictly positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelHyper {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelHyper {
    pub fn isotropic(signal_variance: f64, lengthscale: f64, dim: usize, noise_variance: f64) -> Self {
        Self { signal_variance, lengthscales: vec![lengthscale; dim], noise_variance }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn validate(&self) -> Result<(), GpError> {
        let ok = self.signal_variance > 0.0
            && self.noise_variance > 0.0
            && self.lengthscales.iter().all(|&l| l > 0.0);
        if ok {
            Ok(())
        } else {
            Err(GpError::InvalidHyper)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GpError {
    /// Input dimension does not match the kernel's lengthscale count.
    DimensionMismatch { expected: usize, got: usize },
    /// Inputs and values have different lengths, or the dataset is empty.
    BadDataset,
    /// A hyperparameter is non-positive.
    InvalidHyper,
    /// Cholesky factorization failed even at the maximum jitter.
    Cholesky { jitter: f64 },
}

impl fmt::Display for GpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GpError::DimensionMismatch { expected, got } => {
                write!(f, "input has dimension {got}, kernel expects {expected}")
            }
            GpError::BadDataset => write!(f, "dataset is empty or inputs/values lengths differ"),
            GpError::InvalidHyper => write!(f, "hyperparameters must be strictly positive"),
            GpError::Cholesky { jitter } => {
                write!(f, "kernel matrix not positive definite at jitter {jitter:e}")
            }
        }
    }
}

impl core::error::Error for GpError {}

/// Scaled squared distance `r^2 = sum_i (x_i - y_i)^2 / l_i^2`.
fn scaled_sq_dist(x: &[f64], y: &[f64], lengthscales: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for i in 0..x.len() {
        let d = (x[i] - y[i]) / lengthscales[i];
        r2 += d * d;
    }
    r2
}

fn matern52_from_r(signal_variance: f64, r: f64) -> f64 {
    signal_variance * (1.0 + SQRT_5 * r + (5.0 / 3.0) * r * r) * exp(-SQRT_5 * r)
}

/// Matern-5/2 ARD covariance between two points.
pub fn matern52(x: &[f64], x2: &[f64], hyper: &KernelHyper) -> Result<f64, GpError> {
    if x.len() != hyper.dim() || x2.len() != hyper.dim() {
        return Err(GpError::DimensionMismatch {
            expected: hyper.dim(),
            got: if x.len() != hyper.dim() { x.len() } else { x2.len() },
        });
    }
    hyper.validate()?;
    let r = sqrt(scaled_sq_dist(x, x2, &hyper.lengthscales));
    Ok(matern52_from_r(hyper.signal_variance, r))
}

/// A fitted Gaussian process: training data, hyperparameters, the Cholesky
/// factor of `K + noise*I` and the weight vector `alpha`. Immutable after
/// construction; growing the dataset returns a new state.
#[derive(Debug, Clone)]
pub struct GpState {
    inputs: Vec<f64>,
    dim: usize,
    values: Vec<f64>,
    mean_const: f64,
    hyper: KernelHyper,
    chol: CholeskyFactor,
    alpha: Vec<f64>,
}

impl GpState {
    /// Condition a GP on the dataset. `hyper.noise_variance` seeds the jitter
    /// and is escalated tenfold (up to 1e-4) if factorization fails; the
    /// state records the jitter actually used.
    pub fn fit(
        inputs: &[Vec<f64>],
        values: &[f64],
        hyper: KernelHyper,
        mean_const: f64,
    ) -> Result<Self, GpError> {
        if inputs.is_empty() || inputs.len() != values.len() {
            return Err(GpError::BadDataset);
        }
        hyper.validate()?;
        let dim = hyper.dim();
        for row in inputs {
            if row.len() != dim {
                return Err(GpError::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        let n = inputs.len();
        let flat: Vec<f64> = inputs.iter().flat_map(|r| r.iter().copied()).collect();

        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = matern52_from_r(
                    hyper.signal_variance,
                    sqrt(scaled_sq_dist(
                        &flat[i * dim..(i + 1) * dim],
                        &flat[j * dim..(j + 1) * dim],
                        &hyper.lengthscales,
                    )),
                );
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }

        let mut jitter = hyper.noise_variance;
        let chol = loop {
            let mut noisy = kernel.clone();
            for i in 0..n {
                noisy[i * n + i] += jitter;
            }
            match CholeskyFactor::factor(&noisy, n) {
                Some(c) => break c,
                None if jitter < MAX_JITTER => jitter = (jitter * 10.0).min(MAX_JITTER),
                None => return Err(GpError::Cholesky { jitter }),
            }
        };

        let centered: Vec<f64> = values.iter().map(|v| v - mean_const).collect();
        let alpha = chol.solve(&centered);
        Ok(Self {
            inputs: flat,
            dim,
            values: values.to_vec(),
            mean_const,
            hyper: KernelHyper { noise_variance: jitter, ..hyper },
            chol,
            alpha,
        })
    }

    /// Extend the GP with one observation, reusing the existing factor.
    /// Falls back to a full refit with escalated jitter if the incremental
    /// pivot fails.
    pub fn with_observation(&self, x: &[f64], value: f64) -> Result<Self, GpError> {
        if x.len() != self.dim {
            return Err(GpError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let n = self.len();
        let mut col = Vec::with_capacity(n + 1);
        for i in 0..n {
            col.push(matern52_from_r(
                self.hyper.signal_variance,
                sqrt(scaled_sq_dist(self.input(i), x, &self.hyper.lengthscales)),
            ));
        }
        col.push(self.hyper.signal_variance + self.hyper.noise_variance);

        match self.chol.append_row(&col) {
            Some(chol) => {
                let mut inputs = self.inputs.clone();
                inputs.extend_from_slice(x);
                let mut values = self.values.clone();
                values.push(value);
                let centered: Vec<f64> = values.iter().map(|v| v - self.mean_const).collect();
                let alpha = chol.solve(&centered);
                Ok(Self {
                    inputs,
                    dim: self.dim,
                    values,
                    mean_const: self.mean_const,
                    hyper: self.hyper.clone(),
                    chol,
                    alpha,
                })
            }
            None => {
                let mut rows = self.input_rows();
                rows.push(x.to_vec());
                let mut values = self.values.clone();
                values.push(value);
                let bumped = KernelHyper {
                    noise_variance: (self.hyper.noise_variance * 10.0).min(MAX_JITTER),
                    ..self.hyper.clone()
                };
                Self::fit(&rows, &values, bumped, self.mean_const)
            }
        }
    }

    /// Posterior mean and variance at a point. The variance is clamped to
    /// zero from below after the numerical floor.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64), GpError> {
        if x.len() != self.dim {
            return Err(GpError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let kstar = self.kstar(x);
        let mean = self.mean_const + dot(&kstar, &self.alpha);
        let w = self.chol.solve_lower(&kstar);
        let var = self.hyper.signal_variance - w.iter().map(|v| v * v).sum::<f64>();
        Ok((mean, var.max(0.0)))
    }

    /// Log marginal likelihood of the data and its gradient with respect to
    /// `[log signal_variance, log lengthscale_1..d, log noise_variance,
    /// mean_const]`.
    pub fn log_marginal_likelihood(&self) -> (f64, Vec<f64>) {
        let n = self.len();
        let d = self.dim;
        let centered: Vec<f64> = self.values.iter().map(|v| v - self.mean_const).collect();
        let value = -0.5 * dot(&centered, &self.alpha)
            - self.chol.log_diag_sum()
            - 0.5 * n as f64 * ln(TAU);

        // W = alpha alpha^T - (K + noise I)^-1; each gradient entry is
        // 0.5 * sum(W .* dK/dtheta).
        let kinv = self.chol.inverse();
        let mut grad = vec![0.0; d + 3];
        let ls = &self.hyper.lengthscales;
        for i in 0..n {
            for j in 0..n {
                let w = self.alpha[i] * self.alpha[j] - kinv[i * n + j];
                let xi = self.input(i);
                let xj = self.input(j);
                let r = sqrt(scaled_sq_dist(xi, xj, ls));
                let k = matern52_from_r(self.hyper.signal_variance, r);
                // d/d log signal_variance: the kernel itself.
                grad[0] += 0.5 * w * k;
                // d/d log lengthscale_l: (5/3) sf^2 (1 + sqrt5 r) e^{-sqrt5 r} * (dx_l/l_l)^2
                let common =
                    (5.0 / 3.0) * self.hyper.signal_variance * (1.0 + SQRT_5 * r) * exp(-SQRT_5 * r);
                for l in 0..d {
                    let dl = (xi[l] - xj[l]) / ls[l];
                    grad[1 + l] += 0.5 * w * common * dl * dl;
                }
                if i == j {
                    grad[1 + d] += 0.5 * w * self.hyper.noise_variance;
                }
            }
        }
        grad[2 + d] = self.alpha.iter().sum();
        (value, grad)
    }

    fn kstar(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                matern52_from_r(
                    self.hyper.signal_variance,
                    sqrt(scaled_sq_dist(self.input(i), x, &self.hyper.lengthscales)),
                )
            })
            .collect()
    }

    /// Gradient of the posterior mean and variance at `x` (used by the
    /// acquisition layer).
    pub(crate) fn posterior_with_grad(&self, x: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let d = self.dim;
        let kstar = self.kstar(x);
        let mean = self.mean_const + dot(&kstar, &self.alpha);
        let w = self.chol.solve_lower(&kstar);
        let var = (self.hyper.signal_variance - w.iter().map(|v| v * v).sum::<f64>()).max(0.0);

        // dk(x, xi)/dx_l = -(5/3) sf^2 (1 + sqrt5 r) e^{-sqrt5 r} (x_l - xi_l)/l_l^2
        let ls = &self.hyper.lengthscales;
        let kinv_kstar = self.chol.solve_lower_transpose(&w);
        let mut mean_grad = vec![0.0; d];
        let mut var_grad = vec![0.0; d];
        for i in 0..n {
            let xi = self.input(i);
            let r = sqrt(scaled_sq_dist(x, xi, ls));
            let common =
                -(5.0 / 3.0) * self.hyper.signal_variance * (1.0 + SQRT_5 * r) * exp(-SQRT_5 * r);
            for l in 0..d {
                let dk = common * (x[l] - xi[l]) / (ls[l] * ls[l]);
                mean_grad[l] += dk * self.alpha[i];
                var_grad[l] += -2.0 * dk * kinv_kstar[i];
            }
        }
        (mean, var, mean_grad, var_grad)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean_const(&self) -> f64 {
        self.mean_const
    }

    pub fn hyper(&self) -> &KernelHyper {
        &self.hyper
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn input_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.input(i).to_vec()).collect()
    }

    /// Training input with the highest observed value.
    pub fn best_input(&self) -> (&[f64], f64) {
        let mut best = 0;
        for i in 1..self.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        (self.input(best), self.values[best])
    }

    /// Lower-triangular factor (row-major) for diagnostics.
    pub fn chol_factor(&self) -> &[f64] {
        &self.chol.l
    }
}

/// Log-normal priors for the MAP hyperparameter fit. Lengthscales are
/// log-normal around `lengthscale_log_mean` (natural log of the median, in
/// the same units as the search box), signal variance around
/// `signal_log_mean`; the constant mean is flat. Noise is fixed jitter and
/// not fitted.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperPrior {
    pub lengthscale_log_mean: f64,
    pub lengthscale_log_sigma: f64,
    pub signal_log_mean: f64,
    pub signal_log_sigma: f64,
    pub noise_variance: f64,
}

impl HyperPrior {
    /// Weakly-informative default: median lengthscale equal to the search box
    /// half-width, median signal variance 1.
    pub fn for_box_half_width(half_width: f64) -> Self {
        Self {
            lengthscale_log_mean: ln(half_width),
            lengthscale_log_sigma: 1.0,
            signal_log_mean: 0.0,
            signal_log_sigma: 1.0,
            noise_variance: 1e-6,
        }
    }
}

impl Default for HyperPrior {
    fn default() -> Self {
        Self::for_box_half_width(1.0)
    }
}

/// Result of a MAP hyperparameter fit.
#[derive(Debug, Clone)]
pub struct HyperFit {
    pub hyper: KernelHyper,
    pub mean_const: f64,
    /// True when every restart failed to make progress and the prior-mode
    /// defaults were returned instead.
    pub fallback: bool,
}

/// Maximize the hyperparameter posterior (log marginal likelihood plus
/// log-normal priors) by multi-restart bounded quasi-Newton ascent over
/// `[log signal_variance, log lengthscales.., mean_const]`. Restart 0 starts
/// at the prior mode; further restarts are drawn from the prior.
pub fn fit_hyperparameters<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    values: &[f64],
    prior: &HyperPrior,
    restarts: usize,
    rng: &mut R,
) -> Result<HyperFit, GpError> {
    if inputs.len() < 2 || inputs.len() != values.len() {
        return Err(GpError::BadDataset);
    }
    let restarts = restarts.max(1);
    let dim = inputs[0].len();
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (vmax - vmin).max(1.0);
    let vmean = values.iter().sum::<f64>() / values.len() as f64;

    // Optimization variables: z = [log sf2, log l_1..d, mu0].
    let nz = dim + 2;
    let mut lower = vec![0.0; nz];
    let mut upper = vec![0.0; nz];
    lower[0] = prior.signal_log_mean - 10.0 * prior.signal_log_sigma;
    upper[0] = prior.signal_log_mean + 10.0 * prior.signal_log_sigma;
    for l in 0..dim {
        lower[1 + l] = prior.lengthscale_log_mean - 10.0 * prior.lengthscale_log_sigma;
        upper[1 + l] = prior.lengthscale_log_mean + 10.0 * prior.lengthscale_log_sigma;
    }
    lower[1 + dim] = vmin - 10.0 * span;
    upper[1 + dim] = vmax + 10.0 * span;

    let objective = |z: &[f64], grad: &mut [f64]| -> f64 {
        let hyper = KernelHyper {
            signal_variance: exp(z[0]),
            lengthscales: z[1..1 + dim].iter().map(|&w| exp(w)).collect(),
            noise_variance: prior.noise_variance,
        };
        let mean_const = z[1 + dim];
        let Ok(state) = GpState::fit(inputs, values, hyper, mean_const) else {
            // Push the optimizer away from degenerate corners.
            grad.fill(0.0);
            return f64::NEG_INFINITY;
        };
        let (mut val, lml_grad) = state.log_marginal_likelihood();
        grad[0] = lml_grad[0];
        grad[1..1 + dim].copy_from_slice(&lml_grad[1..1 + dim]);
        grad[1 + dim] = lml_grad[2 + dim];
        // Log-normal priors on the log-parameters; flat prior on the mean.
        let zs = (z[0] - prior.signal_log_mean) / prior.signal_log_sigma;
        val -= 0.5 * zs * zs;
        grad[0] -= zs / prior.signal_log_sigma;
        for l in 0..dim {
            let zl = (z[1 + l] - prior.lengthscale_log_mean) / prior.lengthscale_log_sigma;
            val -= 0.5 * zl * zl;
            grad[1 + l] -= zl / prior.lengthscale_log_sigma;
        }
        val
    };

    let mode: Vec<f64> = {
        let mut z = vec![0.0; nz];
        z[0] = prior.signal_log_mean;
        for l in 0..dim {
            z[1 + l] = prior.lengthscale_log_mean;
        }
        z[1 + dim] = vmean;
        z
    };

    let cfg = LbfgsConfig { max_iters: 40, ..Default::default() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut any_progress = false;
    for restart in 0..restarts {
        let start = if restart == 0 {
            mode.clone()
        } else {
            let mut z = vec![0.0; nz];
            z[0] = prior.signal_log_mean + prior.signal_log_sigma * standard_normal(rng);
            for l in 0..dim {
                z[1 + l] =
                    prior.lengthscale_log_mean + prior.lengthscale_log_sigma * standard_normal(rng);
            }
            z[1 + dim] = rng.random_range(vmin..=vmax.max(vmin + f64::MIN_POSITIVE));
            z
        };
        let out = lbfgs::maximize(objective, &start, &lower, &upper, &cfg);
        any_progress |= out.improved;
        if out.value.is_finite() && best.as_ref().map_or(true, |(v, _)| out.value > *v) {
            best = Some((out.value, out.x));
        }
    }

    if !any_progress || best.is_none() {
        return Ok(HyperFit {
            hyper: KernelHyper {
                signal_variance: exp(prior.signal_log_mean),
                lengthscales: vec![exp(prior.lengthscale_log_mean); dim],
                noise_variance: prior.noise_variance,
            },
            mean_const: vmean,
            fallback: true,
        });
    }

    let (_, z) = best.unwrap();
    Ok(HyperFit {
        hyper: KernelHyper {
            signal_variance: exp(z[0]),
            lengthscales: z[1..1 + dim].iter().map(|&w| exp(w)).collect(),
            noise_variance: prior.noise_variance,
        },
        mean_const: z[1 + dim],
        fallback: false,
    })
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
