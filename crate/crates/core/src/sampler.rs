//! The Metropolis-adjusted proximal chain, plus MALA and ULA baselines.
//!
//! One transition from `x`: center the proximal oracle at
//! `u = x - eta * grad f(x)`, draw the proposal `z` from it, and accept with
//! probability `min(1, ratio)` where
//!
//! ```text
//! log ratio = log Z(x - eta grad f(x)) - log Z(z - eta grad f(z))
//!             + f(x) - f(z)
//!             - ||x - z + eta grad f(z)||^2 / (4 eta)
//!             + ||z - x + eta grad f(x)||^2 / (4 eta)
//! ```
//!
//! The regularizer `g` appears in the proposal density and in the target and
//! cancels exactly in this ratio; the code computes the cancelled form
//! directly instead of ever subtracting `g(z)` from itself. The partition
//! value at the current shifted center is cached in [`ChainState`] and reused
//! for the reverse term, so each step costs one oracle draw, one gradient and
//! one fresh partition evaluation.

use crate::error::{Error, Result};
use crate::math::{axpy, squared_distance};
use crate::oracle::ProxOracle;
use crate::prox::prox_map;
use crate::rng::RngStream;
use crate::target::{CompositeTarget, RegularizerSpec, ScalarFn, VectorFn};

/// How a chain starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    ExplicitPoint(Vec<f64>),
    /// Draw `X0 ~ N(center, I / (L + 1))`.
    GaussianAtCenter(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub eta: f64,
    pub n_steps: u64,
    pub seed: u64,
    /// When set, every step first flips a fair coin and holds in place on
    /// heads, making the chain 1/2-lazy.
    pub lazy: bool,
    pub init: InitSpec,
}

impl SamplerConfig {
    pub fn new(eta: f64, n_steps: u64, seed: u64, init: InitSpec) -> Self {
        Self {
            eta,
            n_steps,
            seed,
            lazy: false,
            init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter(
                "at least one step is required".into(),
            ));
        }
        Ok(())
    }
}

/// Current iterate with the caches the accept ratio needs. The caches are
/// pure functions of `x` and `eta` and recomputing them reproduces the stored
/// values bit for bit.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub grad_fx: Vec<f64>,
    /// U(x) = f(x) + g(x).
    pub u_x: f64,
    /// log Z(x - eta * grad f(x)).
    pub log_z_shift: f64,
    pub step_index: u64,
}

impl ChainState {
    pub fn new(
        target: &CompositeTarget,
        oracle: &dyn ProxOracle,
        x: Vec<f64>,
        eta: f64,
    ) -> Result<Self> {
        let grad_fx = target.f_grad(&x)?;
        let u_x = target.eval_u(&x)?;
        let shifted = axpy(&x, -eta, &grad_fx);
        let log_z_shift = oracle.log_partition(&shifted, eta)?;
        Ok(Self {
            x,
            grad_fx,
            u_x,
            log_z_shift,
            step_index: 0,
        })
    }

    /// Oracle center for the next proposal.
    pub fn shifted_center(&self, eta: f64) -> Vec<f64> {
        axpy(&self.x, -eta, &self.grad_fx)
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: ChainState,
    pub proposed: Vec<f64>,
    pub accepted: bool,
    /// min(0, log ratio); 0 for lazy holds.
    pub log_accept_prob: f64,
    pub was_lazy_hold: bool,
}

struct ProposalEval {
    log_ratio: f64,
    f_z: f64,
    g_z: f64,
    grad_fz: Vec<f64>,
    log_z_z: f64,
}

fn evaluate_proposal(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    state: &ChainState,
    z: &[f64],
    eta: f64,
) -> Result<ProposalEval> {
    let grad_fz = target.f_grad(z)?;
    let f_z = target.f_value(z)?;
    let g_z = target.eval_g(z)?;
    let f_x = state.u_x - target.eval_g(&state.x)?;

    let shifted_z = axpy(z, -eta, &grad_fz);
    let log_z_z = oracle.log_partition(&shifted_z, eta)?;

    // ||z - (x - eta grad f(x))||^2 and ||x - (z - eta grad f(z))||^2
    let forward = squared_distance(z, &state.shifted_center(eta));
    let backward = squared_distance(&state.x, &shifted_z);

    let raw = state.log_z_shift - log_z_z + f_x - f_z + (forward - backward) / (4.0 * eta);
    Ok(ProposalEval {
        log_ratio: raw.min(0.0),
        f_z,
        g_z,
        grad_fz,
        log_z_z,
    })
}

/// log of the proposal density `p(x, y)`, including its normalizer.
pub fn proposal_log_density(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    x: &[f64],
    y: &[f64],
    eta: f64,
) -> Result<f64> {
    let grad = target.f_grad(x)?;
    let center = axpy(x, -eta, &grad);
    let log_z = oracle.log_partition(&center, eta)?;
    let g_y = target.eval_g(y)?;
    Ok(-squared_distance(y, &center) / (4.0 * eta) - g_y - log_z)
}

/// min(0, log accept ratio) for proposing `z` from the state.
pub fn log_accept_ratio(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    state: &ChainState,
    z: &[f64],
    eta: f64,
) -> Result<f64> {
    Ok(evaluate_proposal(target, oracle, state, z, eta)?.log_ratio)
}

/// One transition of the chain.
pub fn step(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    state: &ChainState,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<StepOutcome> {
    let eta = config.eta;
    if config.lazy && rng.uniform() < 0.5 {
        let mut next = state.clone();
        next.step_index += 1;
        return Ok(StepOutcome {
            proposed: state.x.clone(),
            next,
            accepted: false,
            log_accept_prob: 0.0,
            was_lazy_hold: true,
        });
    }

    let center = state.shifted_center(eta);
    let z = oracle
        .sample(&center, eta, rng)
        .map_err(|e| e.at_step(state.step_index))?;
    let eval = evaluate_proposal(target, oracle, state, &z, eta)
        .map_err(|e| e.at_step(state.step_index))?;

    let accept = rng.uniform().ln() < eval.log_ratio;
    let next = if accept {
        ChainState {
            grad_fx: eval.grad_fz,
            u_x: eval.f_z + eval.g_z,
            log_z_shift: eval.log_z_z,
            x: z.clone(),
            step_index: state.step_index + 1,
        }
    } else {
        let mut keep = state.clone();
        keep.step_index += 1;
        keep
    };
    Ok(StepOutcome {
        next,
        proposed: z,
        accepted: accept,
        log_accept_prob: eval.log_ratio,
        was_lazy_hold: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub accepted: bool,
    pub log_accept_prob: f64,
    pub was_lazy_hold: bool,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    /// All iterates, including the initial point: `n_steps + 1` rows.
    pub samples: Vec<Vec<f64>>,
    pub summaries: Vec<StepSummary>,
}

impl ChainRun {
    pub fn acceptance_rate(&self) -> f64 {
        let moves = self
            .summaries
            .iter()
            .filter(|s| !s.was_lazy_hold)
            .count()
            .max(1);
        self.summaries.iter().filter(|s| s.accepted).count() as f64 / moves as f64
    }

    pub fn coordinate_series(&self, coordinate: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[coordinate]).collect()
    }
}

pub fn initial_point(
    target: &CompositeTarget,
    init: &InitSpec,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    match init {
        InitSpec::ExplicitPoint(p) => {
            if p.len() != target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: target.dim(),
                    got: p.len(),
                });
            }
            Ok(p.clone())
        }
        InitSpec::GaussianAtCenter(center) => {
            if center.len() != target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: target.dim(),
                    got: center.len(),
                });
            }
            let sd = 1.0 / (target.smoothness_l + 1.0).sqrt();
            Ok(center.iter().map(|&c| c + sd * rng.standard_normal()).collect())
        }
    }
}

/// Run one chain with the stream layout documented in [`crate::rng`].
pub fn run_chain_indexed(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    config: &SamplerConfig,
    chain_index: u64,
) -> Result<ChainRun> {
    config.validate()?;
    let mut init_rng = RngStream::chain_init(config.seed, chain_index);
    let x0 = initial_point(target, &config.init, &mut init_rng)?;
    let mut state = ChainState::new(target, oracle, x0, config.eta)?;

    let mut rng = RngStream::chain_steps(config.seed, chain_index);
    let mut samples = Vec::with_capacity(config.n_steps as usize + 1);
    let mut summaries = Vec::with_capacity(config.n_steps as usize);
    samples.push(state.x.clone());
    for _ in 0..config.n_steps {
        let outcome = step(target, oracle, &state, config, &mut rng)?;
        samples.push(outcome.next.x.clone());
        summaries.push(StepSummary {
            accepted: outcome.accepted,
            log_accept_prob: outcome.log_accept_prob,
            was_lazy_hold: outcome.was_lazy_hold,
        });
        state = outcome.next;
    }
    Ok(ChainRun { samples, summaries })
}

pub fn run_chain(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    config: &SamplerConfig,
) -> Result<ChainRun> {
    run_chain_indexed(target, oracle, config, 0)
}

// ---------------------------------------------------------------------------
// Baselines: MALA and ULA over a smooth potential.
// ---------------------------------------------------------------------------

/// A smooth potential for the baselines: either a composite target with
/// `g = 0`, or the composite with `g` replaced by its Moreau envelope.
#[derive(Clone)]
pub struct SmoothTarget {
    dim: usize,
    value: ScalarFn,
    grad: VectorFn,
}

impl SmoothTarget {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    /// Use `f` alone. Rejects targets whose regularizer is not zero.
    pub fn from_smooth_composite(target: &CompositeTarget) -> Result<Self> {
        if !matches!(target.g_spec(), RegularizerSpec::Zero) {
            return Err(Error::Unsupported(
                "plain MALA/ULA needs a smooth target; use the Moreau-smoothed variant".into(),
            ));
        }
        let t1 = target.clone();
        let t2 = target.clone();
        Ok(Self {
            dim: target.dim(),
            value: std::sync::Arc::new(move |x: &[f64]| t1.f_value(x).unwrap_or(f64::INFINITY)),
            grad: std::sync::Arc::new(move |x: &[f64]| {
                t2.f_grad(x).unwrap_or_else(|_| vec![f64::NAN; x.len()])
            }),
        })
    }

    /// `f + g^s` where `g^s` is the Moreau envelope of `g` at scale
    /// `smoothing`; its gradient is `(x - prox_{s,g}(x)) / s`.
    pub fn moreau_smoothed(target: &CompositeTarget, smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0) {
            return Err(Error::InvalidParameter(
                "smoothing scale must be positive".into(),
            ));
        }
        // fail early if the regularizer has no proximity operator
        prox_map(target.g_spec(), &vec![0.0; target.dim()], smoothing)?;
        let t1 = target.clone();
        let t2 = target.clone();
        Ok(Self {
            dim: target.dim(),
            value: std::sync::Arc::new(move |x: &[f64]| {
                let p = prox_map(t1.g_spec(), x, smoothing).expect("prox checked at build");
                let env = squared_distance(x, &p) / (2.0 * smoothing)
                    + t1.eval_g(&p).unwrap_or(f64::INFINITY);
                t1.f_value(x).unwrap_or(f64::INFINITY) + env
            }),
            grad: std::sync::Arc::new(move |x: &[f64]| {
                let p = prox_map(t2.g_spec(), x, smoothing).expect("prox checked at build");
                let mut grad = t2.f_grad(x).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
                for ((gi, &xi), &pi) in grad.iter_mut().zip(x).zip(&p) {
                    *gi += (xi - pi) / smoothing;
                }
                grad
            }),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BaselineState {
    pub x: Vec<f64>,
    pub grad_ux: Vec<f64>,
    pub u_x: f64,
    pub step_index: u64,
}

impl BaselineState {
    pub fn new(target: &SmoothTarget, x: Vec<f64>) -> Self {
        let grad_ux = target.grad(&x);
        let u_x = target.value(&x);
        Self {
            x,
            grad_ux,
            u_x,
            step_index: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub next: BaselineState,
    pub proposed: Vec<f64>,
    pub accepted: bool,
    pub log_accept_prob: f64,
    pub was_lazy_hold: bool,
}

/// log q(a -> b) for the MALA proposal `N(a - eta grad U(a), 2 eta I)`,
/// normalizer included.
pub fn mala_proposal_log_density(
    target: &SmoothTarget,
    a: &[f64],
    b: &[f64],
    eta: f64,
) -> f64 {
    let grad = target.grad(a);
    let mean = axpy(a, -eta, &grad);
    let d = a.len() as f64;
    -squared_distance(b, &mean) / (4.0 * eta)
        - 0.5 * d * (crate::math::LN_2PI + (2.0 * eta).ln())
}

/// Classical MALA log accept ratio
/// `log pi(z) q(z, x) - log pi(x) q(x, z)`, capped at zero.
pub fn mala_log_accept_ratio(target: &SmoothTarget, x: &[f64], z: &[f64], eta: f64) -> f64 {
    let raw = -target.value(z) + mala_proposal_log_density(target, z, x, eta)
        + target.value(x)
        - mala_proposal_log_density(target, x, z, eta);
    raw.min(0.0)
}

pub fn mala_step(
    target: &SmoothTarget,
    state: &BaselineState,
    eta: f64,
    lazy: bool,
    rng: &mut RngStream,
) -> BaselineOutcome {
    if lazy && rng.uniform() < 0.5 {
        let mut next = state.clone();
        next.step_index += 1;
        return BaselineOutcome {
            proposed: state.x.clone(),
            next,
            accepted: false,
            log_accept_prob: 0.0,
            was_lazy_hold: true,
        };
    }
    let sd = (2.0 * eta).sqrt();
    let mean = axpy(&state.x, -eta, &state.grad_ux);
    let z: Vec<f64> = mean.iter().map(|&m| m + sd * rng.standard_normal()).collect();

    let log_ratio = mala_log_accept_ratio(target, &state.x, &z, eta);
    let accept = rng.uniform().ln() < log_ratio;
    let next = if accept {
        let mut s = BaselineState::new(target, z.clone());
        s.step_index = state.step_index + 1;
        s
    } else {
        let mut s = state.clone();
        s.step_index += 1;
        s
    };
    BaselineOutcome {
        next,
        proposed: z,
        accepted: accept,
        log_accept_prob: log_ratio,
        was_lazy_hold: false,
    }
}

/// Unadjusted Euler step of the Langevin diffusion.
pub fn ula_step(
    target: &SmoothTarget,
    state: &BaselineState,
    eta: f64,
    lazy: bool,
    rng: &mut RngStream,
) -> BaselineOutcome {
    if lazy && rng.uniform() < 0.5 {
        let mut next = state.clone();
        next.step_index += 1;
        return BaselineOutcome {
            proposed: state.x.clone(),
            next,
            accepted: false,
            log_accept_prob: 0.0,
            was_lazy_hold: true,
        };
    }
    let sd = (2.0 * eta).sqrt();
    let mean = axpy(&state.x, -eta, &state.grad_ux);
    let z: Vec<f64> = mean.iter().map(|&m| m + sd * rng.standard_normal()).collect();
    let mut next = BaselineState::new(target, z.clone());
    next.step_index = state.step_index + 1;
    BaselineOutcome {
        next,
        proposed: z,
        accepted: true,
        log_accept_prob: 0.0,
        was_lazy_hold: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Mala,
    Ula,
}

/// Baseline analogue of [`run_chain_indexed`], with identical stream layout
/// and random-number consumption per step.
pub fn run_baseline_chain_indexed(
    target: &CompositeTarget,
    smooth: &SmoothTarget,
    kind: BaselineKind,
    config: &SamplerConfig,
    chain_index: u64,
) -> Result<ChainRun> {
    config.validate()?;
    let mut init_rng = RngStream::chain_init(config.seed, chain_index);
    let x0 = initial_point(target, &config.init, &mut init_rng)?;
    let mut state = BaselineState::new(smooth, x0);

    let mut rng = RngStream::chain_steps(config.seed, chain_index);
    let mut samples = Vec::with_capacity(config.n_steps as usize + 1);
    let mut summaries = Vec::with_capacity(config.n_steps as usize);
    samples.push(state.x.clone());
    for _ in 0..config.n_steps {
        let outcome = match kind {
            BaselineKind::Mala => mala_step(smooth, &state, config.eta, config.lazy, &mut rng),
            BaselineKind::Ula => ula_step(smooth, &state, config.eta, config.lazy, &mut rng),
        };
        samples.push(outcome.next.x.clone());
        summaries.push(StepSummary {
            accepted: outcome.accepted,
            log_accept_prob: outcome.log_accept_prob,
            was_lazy_hold: outcome.was_lazy_hold,
        });
        state = outcome.next;
    }
    Ok(ChainRun { samples, summaries })
}
