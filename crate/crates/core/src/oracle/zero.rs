//! Oracle for `g = 0`: the proposal is exactly `N(u, 2 eta I)`.

use crate::error::Result;
use crate::math::LN_2PI;
use crate::rng::RngStream;

use super::{check_oracle_args, ProxOracle};

#[derive(Debug, Clone)]
pub struct ZeroOracle {
    dim: usize,
}

impl ZeroOracle {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl ProxOracle for ZeroOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, u: &[f64], eta: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_oracle_args(self.dim, u, eta)?;
        let sd = (2.0 * eta).sqrt();
        Ok(u.iter().map(|&c| c + sd * rng.standard_normal()).collect())
    }

    fn log_partition(&self, _u: &[f64], eta: f64) -> Result<f64> {
        check_oracle_args(self.dim, _u, eta)?;
        // (4 pi eta)^{d/2}
        Ok(0.5 * self.dim as f64 * (LN_2PI + (2.0 * eta).ln()))
    }
}
