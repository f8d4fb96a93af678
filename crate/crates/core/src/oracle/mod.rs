//! Proximal sampling oracles.
//!
//! An oracle answers two queries for its bound regularizer `g`: an exact
//! draw from the density proportional to `exp(-||y - u||^2 / (4 eta) - g(y))`
//! and the log of the partition function `Z(u)` of that density. The chain in
//! [`crate::sampler`] centers the oracle at `u = x - eta * grad f(x)` each
//! step, but the oracle itself is agnostic to where `u` comes from.

mod group;
mod l1;
mod separable;
mod zero;

pub use group::{group_lasso_oracle_sample, GroupLassoOracle, DEFAULT_GRID_RESOLUTION};
pub use l1::{laplace_log_partition_1d, laplace_oracle_mixture, LaplaceMixture1d, ScaledL1Oracle};
pub use separable::SeparableOracle;
pub use zero::ZeroOracle;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::target::{CompositeTarget, RegularizerSpec};

pub trait ProxOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// One exact draw from the density proportional to
    /// `exp(-||y - u||^2 / (4 eta) - g(y))`.
    fn sample(&self, u: &[f64], eta: f64, rng: &mut RngStream) -> Result<Vec<f64>>;

    /// `log Z(u) = log integral of exp(-||y - u||^2 / (4 eta) - g(y)) dy`.
    fn log_partition(&self, u: &[f64], eta: f64) -> Result<f64>;
}

pub(crate) fn check_oracle_args(dim: usize, u: &[f64], eta: f64) -> Result<()> {
    if u.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: u.len(),
        });
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "oracle step size must be positive, got {eta}"
        )));
    }
    Ok(())
}

/// Oracle implementation matching a regularizer description.
pub fn oracle_for_spec(spec: &RegularizerSpec, dim: usize) -> Result<Arc<dyn ProxOracle>> {
    spec.validate(dim)?;
    Ok(match spec {
        RegularizerSpec::Zero => Arc::new(ZeroOracle::new(dim)),
        RegularizerSpec::ScaledL1 { lambda } => Arc::new(ScaledL1Oracle::new(dim, *lambda)?),
        RegularizerSpec::SeparableGeneric { components } => {
            Arc::new(SeparableOracle::new(components.clone()))
        }
        RegularizerSpec::GroupLasso { groups, weights } => Arc::new(GroupLassoOracle::new(
            dim,
            groups.clone(),
            weights.clone(),
            DEFAULT_GRID_RESOLUTION,
        )?),
        RegularizerSpec::Custom(custom) => {
            if custom.oracle.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: custom.oracle.dim(),
                });
            }
            custom.oracle.clone()
        }
    })
}

/// Oracle for a target's regularizer.
pub fn oracle_for_target(target: &CompositeTarget) -> Result<Arc<dyn ProxOracle>> {
    oracle_for_spec(target.g_spec(), target.dim())
}
