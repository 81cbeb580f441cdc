//! The attack loop: seed a GP surrogate with random coefficient vectors,
//! then repeatedly maximize the acquisition over the low-dimensional box,
//! project onto the epsilon-ball, map to image space, and query the oracle,
//! growing the surrogate on failures and stopping at the first success or
//! when the budget runs out. A projected random-search baseline shares the
//! same accounting so campaigns can compare query efficiency.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{maximize_acquisition, AcquisitionKind, AcquisitionSpec, SearchBox};
use crate::gp::{fit_hyperparameters, GpError, GpState, HyperPrior};
use crate::math::fabs;
use crate::oracle::{objective, ImageTensor, Label, ObjectiveSpec, Oracle, OracleError, QueryLedger};
use crate::subspace::{map_to_image, project, BasisMode, NormKind, Perturbation, SubspaceError, SubspaceSpec};

/// Distribution the initial design (and the random-search baseline) draws
/// coefficients from, before projection onto the epsilon-ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitDistribution {
    StdNormal,
    /// Uniform on `[-1, 1]` per coordinate.
    Uniform,
}

/// Surrogate bookkeeping knobs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GpOptions {
    /// Refit hyperparameters every this many new observations (refits also
    /// happen on the first three surrogate sizes).
    pub refit_every: usize,
    /// Restarts for the hyperparameter MAP ascent.
    pub fit_restarts: usize,
    /// Random restarts for the acquisition maximization.
    pub acq_restarts: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self { refit_every: 5, fit_restarts: 2, acq_restarts: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackConfig {
    pub norm: NormKind,
    pub eps: f64,
    pub budget: u64,
    /// Side length of the low-dimensional grid per channel.
    pub low_dim_side: usize,
    pub basis_mode: BasisMode,
    /// Initial design size (`n0`).
    pub n_init: usize,
    pub init_dist: InitDistribution,
    pub objective: ObjectiveSpec,
    pub acquisition: AcquisitionKind,
    /// Weight for the UCB acquisition (unused otherwise).
    pub ucb_beta: f64,
    pub seed: u64,
    pub gp: GpOptions,
}

impl AttackConfig {
    /// l-infinity defaults: low-resolution grid with nearest-neighbor
    /// upsampling, standard-normal initialization, expected improvement.
    pub fn linf(eps: f64, budget: u64, low_dim_side: usize) -> Self {
        Self {
            norm: NormKind::Linf,
            eps,
            budget,
            low_dim_side,
            basis_mode: BasisMode::Nni,
            n_init: 5,
            init_dist: InitDistribution::StdNormal,
            objective: ObjectiveSpec::untargeted_hard(),
            acquisition: AcquisitionKind::ExpectedImprovement,
            ucb_beta: 2.0,
            seed: 0,
            gp: GpOptions::default(),
        }
    }

    /// l2 defaults: full low-frequency Fourier basis, uniform initialization,
    /// expected improvement.
    pub fn l2(eps: f64, budget: u64, low_dim_side: usize) -> Self {
        Self {
            norm: NormKind::L2,
            basis_mode: BasisMode::FftFull,
            init_dist: InitDistribution::Uniform,
            ..Self::linf(eps, budget, low_dim_side)
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.eps > 0.0) {
            return Err(AttackError::Config("eps must be positive"));
        }
        if self.budget == 0 {
            return Err(AttackError::Config("budget must be positive"));
        }
        if self.n_init == 0 || self.n_init as u64 >= self.budget {
            return Err(AttackError::Config("n_init must satisfy 1 <= n_init < budget"));
        }
        if self.low_dim_side == 0 {
            return Err(AttackError::Config("low_dim_side must be positive"));
        }
        Ok(())
    }

    /// Subspace spec for an image of the given shape; attacks require square
    /// inputs.
    pub fn subspace_spec(&self, image: &ImageTensor) -> Result<SubspaceSpec, AttackError> {
        if image.height != image.width {
            return Err(AttackError::Config("attacks require square images"));
        }
        SubspaceSpec::new(self.basis_mode, self.low_dim_side, image.channels, image.height)
            .map_err(AttackError::Subspace)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackError {
    Config(&'static str),
    Subspace(SubspaceError),
    Gp(GpError),
    /// The oracle failed mid-attack; the query count at abort is preserved.
    Oracle { error: OracleError, queries_used: u64 },
}

impl fmt::Display for AttackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackError::Config(msg) => write!(f, "invalid attack config: {msg}"),
            AttackError::Subspace(e) => write!(f, "subspace error: {e}"),
            AttackError::Gp(e) => write!(f, "surrogate error: {e}"),
            AttackError::Oracle { error, queries_used } => {
                write!(f, "oracle failed after {queries_used} queries: {error}")
            }
        }
    }
}

impl core::error::Error for AttackError {}

impl From<SubspaceError> for AttackError {
    fn from(e: SubspaceError) -> Self {
        AttackError::Subspace(e)
    }
}

impl From<GpError> for AttackError {
    fn from(e: GpError) -> Self {
        AttackError::Gp(e)
    }
}

/// One `(query index, objective value)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub query: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackResult {
    pub success: bool,
    pub queries_used: u64,
    pub final_coeffs: Vec<f64>,
    pub final_delta: Perturbation,
    /// One entry per oracle query, in order.
    pub trace: Vec<TracePoint>,
    /// Class the oracle reported for the successful perturbation.
    pub adversarial_label: Option<Label>,
    /// Rows held by the surrogate at exit (zero for the random baseline).
    pub gp_observations: usize,
}

impl AttackResult {
    /// Running maximum of the trace values, one entry per query.
    pub fn cumulative_best(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.trace
            .iter()
            .map(|t| {
                best = best.max(t.value);
                best
            })
            .collect()
    }
}

/// Draw the initial design: `n_init` coefficient vectors from the configured
/// distribution, each projected onto the epsilon-ball. Deterministic for a
/// given rng state.
pub fn init_design<R: Rng + ?Sized>(
    config: &AttackConfig,
    coeff_len: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..config.n_init)
        .map(|_| {
            let raw: Vec<f64> = (0..coeff_len)
                .map(|_| match config.init_dist {
                    InitDistribution::StdNormal => rng.sample(rand_distr::StandardNormal),
                    InitDistribution::Uniform => rng.random_range(-1.0..1.0),
                })
                .collect();
            project(&raw, config.eps, config.norm)
        })
        .collect()
}

struct AttackRun<'a> {
    config: &'a AttackConfig,
    spec: SubspaceSpec,
    x0: &'a ImageTensor,
    y0: Label,
    ledger: QueryLedger,
    trace: Vec<TracePoint>,
}

impl<'a> AttackRun<'a> {
    fn new(config: &'a AttackConfig, x0: &'a ImageTensor, y0: Label) -> Result<Self, AttackError> {
        config.validate()?;
        let spec = config.subspace_spec(x0)?;
        Ok(Self {
            config,
            spec,
            x0,
            y0,
            ledger: QueryLedger::new(config.budget),
            trace: Vec::new(),
        })
    }

    /// Map, query, record. The coefficient vector must already be projected.
    fn evaluate(
        &mut self,
        oracle: &mut dyn Oracle,
        coeffs: &[f64],
    ) -> Result<(Perturbation, f64, bool, Label), AttackError> {
        let delta = map_to_image(coeffs, &self.spec, self.config.norm)?;
        let eval = objective(
            &self.config.objective,
            oracle,
            &mut self.ledger,
            self.x0,
            self.y0,
            &delta,
        )
        .map_err(|error| AttackError::Oracle { error, queries_used: self.ledger.used() })?;
        self.trace.push(TracePoint { query: self.ledger.used(), value: eval.value });
        Ok((delta, eval.value, eval.success, eval.label))
    }

    fn result(
        self,
        success: bool,
        coeffs: Vec<f64>,
        delta: Perturbation,
        label: Option<Label>,
        gp_observations: usize,
    ) -> AttackResult {
        AttackResult {
            success,
            queries_used: self.ledger.used(),
            final_coeffs: coeffs,
            final_delta: delta,
            trace: self.trace,
            adversarial_label: label,
            gp_observations,
        }
    }
}

/// Run the Bayesian-optimization attack on one image. The caller is expected
/// to have verified that the oracle classifies `x0` as `y0`; already
/// misclassified inputs should be skipped, not attacked.
///
/// Exits at the first successful query, including during the initial design,
/// or when the budget is exhausted. The surrogate grows only on failed
/// queries.
pub fn bayes_attack(
    x0: &ImageTensor,
    y0: Label,
    config: &AttackConfig,
    oracle: &mut dyn Oracle,
) -> Result<AttackResult, AttackError> {
    let mut run = AttackRun::new(config, x0, y0)?;
    let coeff_len = run.spec.coeff_len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();

    // Initial design; exiting early on a lucky draw saves budget.
    for coeffs in init_design(config, coeff_len, &mut rng) {
        let (delta, value, success, label) = run.evaluate(oracle, &coeffs)?;
        if success {
            let n = inputs.len();
            return Ok(run.result(true, coeffs, delta, Some(label), n));
        }
        inputs.push(coeffs);
        values.push(value);
    }

    let prior = HyperPrior::for_box_half_width(config.eps);
    let mut fit = fit_hyperparameters(&inputs, &values, &prior, config.gp.fit_restarts, &mut rng)?;
    let mut gp = GpState::fit(&inputs, &values, fit.hyper.clone(), fit.mean_const)?;
    let bounds = SearchBox::symmetric(config.eps, coeff_len);

    let mut last = (inputs[inputs.len() - 1].clone(), None);
    while !run.ledger.exhausted() {
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let acq = AcquisitionSpec::of_kind(config.acquisition, config.ucb_beta, best);
        let candidate = maximize_acquisition(&gp, &acq, &bounds, config.gp.acq_restarts, &mut rng);
        let mut candidate = project(&candidate, config.eps, config.norm);

        // The binary objective plateaus, so the maximizer can return an
        // already-queried point; nudge it to keep the kernel matrix sane.
        if is_duplicate(&inputs, &candidate) {
            let scale = 1e-6 * config.eps;
            for c in candidate.iter_mut() {
                *c += rng.random_range(-scale..scale);
            }
            candidate = project(&candidate, config.eps, config.norm);
        }

        let (delta, value, success, label) = run.evaluate(oracle, &candidate)?;
        if success {
            let n = inputs.len();
            return Ok(run.result(true, candidate, delta, Some(label), n));
        }
        last = (candidate.clone(), Some(delta));
        inputs.push(candidate);
        values.push(value);

        let n = inputs.len();
        let since_init = n - config.n_init;
        if since_init <= 2 || since_init % config.gp.refit_every == 0 {
            fit = fit_hyperparameters(&inputs, &values, &prior, config.gp.fit_restarts, &mut rng)?;
            gp = GpState::fit(&inputs, &values, fit.hyper.clone(), fit.mean_const)?;
        } else {
            gp = gp.with_observation(&inputs[n - 1], values[n - 1])?;
        }
    }

    let (coeffs, delta) = last;
    let delta = match delta {
        Some(d) => d,
        None => map_to_image(&coeffs, &run.spec, config.norm)?,
    };
    let n = inputs.len();
    Ok(run.result(false, coeffs, delta, None, n))
}

/// Projected random search with the same budget accounting as the main
/// attack: every candidate is a fresh draw from the init distribution,
/// projected onto the epsilon-ball.
pub fn random_search_attack(
    x0: &ImageTensor,
    y0: Label,
    config: &AttackConfig,
    oracle: &mut dyn Oracle,
) -> Result<AttackResult, AttackError> {
    let mut run = AttackRun::new(config, x0, y0)?;
    let coeff_len = run.spec.coeff_len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut last: Option<(Vec<f64>, Perturbation)> = None;
    while !run.ledger.exhausted() {
        let raw: Vec<f64> = (0..coeff_len)
            .map(|_| match config.init_dist {
                InitDistribution::StdNormal => rng.sample(rand_distr::StandardNormal),
                InitDistribution::Uniform => rng.random_range(-1.0..1.0),
            })
            .collect();
        let coeffs = project(&raw, config.eps, config.norm);
        let (delta, _value, success, label) = run.evaluate(oracle, &coeffs)?;
        if success {
            return Ok(run.result(true, coeffs, delta, Some(label), 0));
        }
        last = Some((coeffs, delta));
    }
    let (coeffs, delta) = last.expect("budget >= 1 guarantees at least one query");
    Ok(run.result(false, coeffs, delta, None, 0))
}

fn is_duplicate(rows: &[Vec<f64>], candidate: &[f64]) -> bool {
    rows.iter().any(|row| {
        row.iter()
            .zip(candidate.iter())
            .all(|(a, b)| fabs(a - b) <= 1e-10)
    })
}
