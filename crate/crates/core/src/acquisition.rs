//! Acquisition functions over the GP posterior and their maximization by
//! multi-start bounded quasi-Newton ascent. Expected improvement is the
//! default; probability of improvement, UCB and the plain posterior mean are
//! available as alternates.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::gp::{GpError, GpState};
use crate::lbfgs::{self, LbfgsConfig};
use crate::math::{norm_cdf, norm_pdf, sqrt};

/// Below this posterior standard deviation the improvement-based functions
/// switch to their deterministic branch with zero gradient.
const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AcquisitionKind {
    ExpectedImprovement,
    ProbabilityOfImprovement,
    UpperConfidenceBound,
    PosteriorMean,
}

/// An acquisition function instance: the kind, its UCB weight when
/// applicable, and the incumbent best observed value.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionSpec {
    kind: AcquisitionKind,
    ucb_beta: Option<f64>,
    pub best_value: f64,
}

impl AcquisitionSpec {
    pub fn expected_improvement(best_value: f64) -> Self {
        Self { kind: AcquisitionKind::ExpectedImprovement, ucb_beta: None, best_value }
    }

    pub fn probability_of_improvement(best_value: f64) -> Self {
        Self { kind: AcquisitionKind::ProbabilityOfImprovement, ucb_beta: None, best_value }
    }

    /// UCB with `mean + beta * std`. `beta` must be positive.
    pub fn upper_confidence_bound(beta: f64, best_value: f64) -> Self {
        assert!(beta > 0.0, "ucb beta must be positive");
        Self { kind: AcquisitionKind::UpperConfidenceBound, ucb_beta: Some(beta), best_value }
    }

    pub fn posterior_mean(best_value: f64) -> Self {
        Self { kind: AcquisitionKind::PosteriorMean, ucb_beta: None, best_value }
    }

    pub fn of_kind(kind: AcquisitionKind, ucb_beta: f64, best_value: f64) -> Self {
        match kind {
            AcquisitionKind::ExpectedImprovement => Self::expected_improvement(best_value),
            AcquisitionKind::ProbabilityOfImprovement => Self::probability_of_improvement(best_value),
            AcquisitionKind::UpperConfidenceBound => Self::upper_confidence_bound(ucb_beta, best_value),
            AcquisitionKind::PosteriorMean => Self::posterior_mean(best_value),
        }
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }
}

/// Axis-aligned box the acquisition search is confined to.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(
            lower.iter().zip(upper.iter()).all(|(l, u)| l < u),
            "search box must satisfy lower < upper elementwise"
        );
        Self { lower, upper }
    }

    /// The box `[-eps, eps]^dim`.
    pub fn symmetric(eps: f64, dim: usize) -> Self {
        assert!(eps > 0.0);
        Self { lower: vec![-eps; dim], upper: vec![eps; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(&l, &u)| rng.random_range(l..u))
            .collect()
    }
}

/// Closed-form expected improvement of a Gaussian with the given mean and
/// standard deviation over `best`: `std * (z * Phi(z) + phi(z))` with
/// `z = (mean - best) / std`, degenerating to `max(mean - best, 0)` when the
/// standard deviation vanishes. Always non-negative.
pub fn expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    debug_assert!(std >= 0.0);
    if std <= STD_FLOOR {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / std;
    (std * (z * norm_cdf(z) + norm_pdf(z))).max(0.0)
}

/// Acquisition value and its gradient with respect to the input point.
pub fn acquisition_value_and_grad(
    gp: &GpState,
    spec: &AcquisitionSpec,
    x: &[f64],
) -> Result<(f64, Vec<f64>), GpError> {
    if x.len() != gp.dim() {
        return Err(GpError::DimensionMismatch { expected: gp.dim(), got: x.len() });
    }
    let (mean, var, mean_grad, var_grad) = gp.posterior_with_grad(x);
    let std = sqrt(var);
    let dim = x.len();
    let best = spec.best_value;

    let (value, grad) = match spec.kind {
        AcquisitionKind::PosteriorMean => (mean, mean_grad),
        AcquisitionKind::UpperConfidenceBound => {
            let beta = spec.ucb_beta.expect("ucb spec carries beta");
            if std <= STD_FLOOR {
                (mean, mean_grad)
            } else {
                let mut g = mean_grad;
                for i in 0..dim {
                    g[i] += beta * var_grad[i] / (2.0 * std);
                }
                (mean + beta * std, g)
            }
        }
        AcquisitionKind::ExpectedImprovement => {
            if std <= STD_FLOOR {
                ((mean - best).max(0.0), vec![0.0; dim])
            } else {
                let z = (mean - best) / std;
                let (cdf, pdf) = (norm_cdf(z), norm_pdf(z));
                let value = (std * (z * cdf + pdf)).max(0.0);
                // dEI/dmean = Phi(z), dEI/dstd = phi(z)
                let mut g = vec![0.0; dim];
                for i in 0..dim {
                    g[i] = cdf * mean_grad[i] + pdf * var_grad[i] / (2.0 * std);
                }
                (value, g)
            }
        }
        AcquisitionKind::ProbabilityOfImprovement => {
            if std <= STD_FLOOR {
                (if mean > best { 1.0 } else { 0.0 }, vec![0.0; dim])
            } else {
                let z = (mean - best) / std;
                let pdf = norm_pdf(z);
                let mut g = vec![0.0; dim];
                for i in 0..dim {
                    let std_grad = var_grad[i] / (2.0 * std);
                    g[i] = pdf * (mean_grad[i] - z * std_grad) / std;
                }
                (norm_cdf(z), g)
            }
        }
    };
    Ok((value, grad))
}

/// Maximize the acquisition over the box with `restarts` uniform starts plus
/// the incumbent best training input. Returns the box-clipped candidate with
/// the highest acquisition value across every trajectory and start point;
/// deterministic for a given rng state.
pub fn maximize_acquisition<R: Rng + ?Sized>(
    gp: &GpState,
    spec: &AcquisitionSpec,
    bounds: &SearchBox,
    restarts: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(restarts >= 1);
    assert_eq!(bounds.dim(), gp.dim());
    let cfg = LbfgsConfig::default();

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + 1);
    let (incumbent, _) = gp.best_input();
    let clipped: Vec<f64> = incumbent
        .iter()
        .zip(bounds.lower.iter().zip(bounds.upper.iter()))
        .map(|(&v, (&l, &u))| v.clamp(l, u))
        .collect();
    starts.push(clipped);
    for _ in 0..restarts {
        starts.push(bounds.sample(rng));
    }

    let mut best_x: Option<Vec<f64>> = None;
    let mut best_v = f64::NEG_INFINITY;
    for start in starts {
        let out = lbfgs::maximize(
            |x, g| {
                let (v, grad) = acquisition_value_and_grad(gp, spec, x)
                    .expect("dimensions checked above");
                g.copy_from_slice(&grad);
                v
            },
            &start,
            &bounds.lower,
            &bounds.upper,
            &cfg,
        );
        if out.value > best_v || best_x.is_none() {
            best_v = out.value;
            best_x = Some(out.x);
        }
    }
    best_x.expect("at least one restart")
}
