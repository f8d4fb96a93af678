//! Step-size and warm-start helpers derived from the regularity constants.
//!
//! The radius, step size, warmness and tail radius below are exact arithmetic
//! images of their defining formulas with every universal constant set to a
//! caller-controlled value (1 by default, since the theory leaves them
//! unspecified). The recommended step size is therefore a heuristic scale,
//! not a certified bound.

use crate::error::Result;
use crate::target::CompositeTarget;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningReport {
    /// ||grad f(x0) + v|| with v a subgradient of g at x0.
    pub grad_norm_a0: f64,
    /// Ball radius concentrating the mass relevant for mixing at accuracy
    /// `epsilon`.
    pub radius_r: f64,
    /// 1 / (2 L^2 R^2 + L d).
    pub recommended_eta: f64,
    /// log of the warm-start bound for the Gaussian initialization.
    pub warmness_log_m0: f64,
    /// Radius with target mass at least `1 - s` around the center.
    pub tail_radius_rs: f64,
}

/// Tail radius: the ball of this radius around the dissipativity center
/// carries target mass at least `1 - s`.
pub fn tail_radius(target: &CompositeTarget, s: f64, c: f64) -> f64 {
    let md2 = target.lipschitz_md * target.lipschitz_md;
    c * ((target.dissip_beta + target.dim() as f64 + md2 + (1.0 / s).ln()) / target.dissip_mu)
        .sqrt()
}

pub fn tune(target: &CompositeTarget, x0: &[f64], epsilon: f64, s: f64) -> Result<TuningReport> {
    tune_with_constant(target, x0, epsilon, s, 1.0)
}

/// Same as [`tune`] with an explicit universal constant `c`.
pub fn tune_with_constant(
    target: &CompositeTarget,
    x0: &[f64],
    epsilon: f64,
    s: f64,
    c: f64,
) -> Result<TuningReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) && epsilon != 1.0 {
        return Err(crate::error::Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(crate::error::Error::InvalidParameter(format!(
            "s must lie in (0, 1), got {s}"
        )));
    }
    let l = target.smoothness_l;
    let mu = target.dissip_mu;
    let beta = target.dissip_beta;
    let d = target.dim() as f64;
    let md = target.lipschitz_md;

    let grad = target.f_grad(x0)?;
    let sub = target.subgrad_g(x0)?;
    let a0 = crate::math::norm2(
        &grad
            .iter()
            .zip(&sub)
            .map(|(a, b)| a + b)
            .collect::<Vec<f64>>(),
    );

    let log_cond = (4.0 * (l + 1.0) / mu).ln();
    let inner = (l + 1.0 / mu) * a0 * a0
        + md * md
        + beta
        + d * log_cond
        + (1.0 / epsilon).ln();
    let radius_r = c / mu.sqrt() * inner.max(0.0).sqrt();
    let recommended_eta = 1.0 / (2.0 * l * l * radius_r * radius_r + l * d);
    let warmness_log_m0 =
        0.5 * d * log_cond + (l + 1.0 / mu) * a0 * a0 + 0.25 * md * md + beta;
    let tail_radius_rs = tail_radius(target, s, c);

    Ok(TuningReport {
        grad_norm_a0: a0,
        radius_r,
        recommended_eta,
        warmness_log_m0,
        tail_radius_rs,
    })
}
