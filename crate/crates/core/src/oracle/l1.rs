//! Closed-form oracle for `g(y) = lambda * ||y||_1`.
//!
//! Each coordinate density `exp(-(y - u)^2 / (4 eta) - lambda |y|)` splits at
//! zero into two Gaussian branches. Completing the square on either side,
//!
//! ```text
//! y >= 0:  exp(eta lambda^2 - lambda u) * exp(-(y - (u - 2 eta lambda))^2 / (4 eta))
//! y <  0:  exp(eta lambda^2 + lambda u) * exp(-(y - (u + 2 eta lambda))^2 / (4 eta))
//! ```
//!
//! so the density is a two-component mixture of truncated normals with
//! variance `2 eta`, and the partition function is
//!
//! ```text
//! Z(u) = sqrt(4 pi eta) * exp(eta lambda^2)
//!        * [ exp(-lambda u) Phi((u - 2 eta lambda) / sqrt(2 eta))
//!          + exp( lambda u) Phi(-(u + 2 eta lambda) / sqrt(2 eta)) ]
//! ```
//!
//! All of it is evaluated in log space through the complementary error
//! function; the branch masses stay accurate even when one branch carries
//! essentially all the mass.

use crate::error::Result;
use crate::math::{log_add_exp, log_normal_cdf, LN_2PI};
use crate::rng::RngStream;
use crate::truncnorm::{sample_truncated_normal, TruncatedNormalParams};

use super::{check_oracle_args, ProxOracle};

/// Exact two-branch decomposition of one l1 coordinate.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceMixture1d {
    /// Mass fraction of the branch supported on [0, inf).
    pub weight_plus: f64,
    /// Mass fraction of the branch supported on (-inf, 0].
    pub weight_minus: f64,
    pub tn_plus: TruncatedNormalParams,
    pub tn_minus: TruncatedNormalParams,
    /// log Z(u) of the coordinate density.
    pub log_partition: f64,
}

/// Decompose `exp(-(y - u)^2 / (4 eta) - lambda |y|)` into its two truncated
/// normal branches.
pub fn laplace_oracle_mixture(u: f64, eta: f64, lambda: f64) -> LaplaceMixture1d {
    let sd = (2.0 * eta).sqrt();
    let mean_plus = u - 2.0 * eta * lambda;
    let mean_minus = u + 2.0 * eta * lambda;

    // branch masses, in log space and without the shared prefactor
    let log_mass_plus = -lambda * u + log_normal_cdf(mean_plus / sd);
    let log_mass_minus = lambda * u + log_normal_cdf(-mean_minus / sd);
    let log_sum = log_add_exp(log_mass_plus, log_mass_minus);
    let weight_plus = 1.0 / (1.0 + (log_mass_minus - log_mass_plus).exp());
    let weight_minus = 1.0 - weight_plus;

    let log_partition = 0.5 * (LN_2PI + (2.0 * eta).ln()) + eta * lambda * lambda + log_sum;

    LaplaceMixture1d {
        weight_plus,
        weight_minus,
        tn_plus: TruncatedNormalParams {
            mean: mean_plus,
            variance: 2.0 * eta,
            lower: 0.0,
            upper: f64::INFINITY,
        },
        tn_minus: TruncatedNormalParams {
            mean: mean_minus,
            variance: 2.0 * eta,
            lower: f64::NEG_INFINITY,
            upper: 0.0,
        },
        log_partition,
    }
}

/// log Z(u) for one l1 coordinate.
pub fn laplace_log_partition_1d(u: f64, eta: f64, lambda: f64) -> f64 {
    laplace_oracle_mixture(u, eta, lambda).log_partition
}

/// Oracle for `g(y) = lambda ||y||_1`, coordinatewise mixture sampling.
#[derive(Debug, Clone)]
pub struct ScaledL1Oracle {
    dim: usize,
    lambda: f64,
}

impl ScaledL1Oracle {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(crate::error::Error::InvalidParameter(format!(
                "l1 scale must be positive, got {lambda}"
            )));
        }
        Ok(Self { dim, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProxOracle for ScaledL1Oracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, u: &[f64], eta: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_oracle_args(self.dim, u, eta)?;
        Ok(u.iter()
            .map(|&ui| {
                let mixture = laplace_oracle_mixture(ui, eta, self.lambda);
                if rng.uniform() < mixture.weight_plus {
                    sample_truncated_normal(&mixture.tn_plus, rng)
                } else {
                    sample_truncated_normal(&mixture.tn_minus, rng)
                }
            })
            .collect())
    }

    fn log_partition(&self, u: &[f64], eta: f64) -> Result<f64> {
        check_oracle_args(self.dim, u, eta)?;
        Ok(u.iter()
            .map(|&ui| laplace_log_partition_1d(ui, eta, self.lambda))
            .sum())
    }
}
