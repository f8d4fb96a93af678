//! Oracle for group-lasso regularizers `g(x) = sum_j w_j ||x_{G_j}||_2`.
//!
//! The density factorizes over groups. Within a group with center `x` and
//! weight `w`, write a candidate `y = t * xhat + r * v` with `xhat = x /
//! ||x||`, `v` a unit vector orthogonal to `xhat`, `t` the coordinate along
//! the center and `r >= 0` the orthogonal radius. Integrating out the
//! direction `v` leaves the two-dimensional density
//!
//! ```text
//! q(t, r) ~ r^{d_g - 2} exp(-((t - rho)^2 + r^2) / (4 eta) - w sqrt(t^2 + r^2))
//! ```
//!
//! with `rho = ||x||`. Sampling inverts the marginal CDF of `t` and then the
//! conditional CDF of `r` given `t`, both built from a tabulated grid with
//! monotone cubic interpolation; the direction `v` is uniform on the sphere
//! of the hyperplane orthogonal to `xhat`. The partition function integrates
//! the same density with nested adaptive quadrature, which is also what the
//! grid tables are checked against in the tests.
//!
//! Degenerate cases: one-dimensional groups reduce to the l1 oracle, and a
//! group centered at the origin is spherically symmetric with radial density
//! `r^{d_g - 1} exp(-r^2 / (4 eta) - w r)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::logconcave::sample_logconcave_1d;
use crate::math::{log_sphere_surface, norm2};
use crate::pchip::CdfTable;
use crate::quad::{quadrature_1d, IntegrationWindow, Quadrature1DConfig};
use crate::rng::RngStream;
use crate::truncnorm::sample_truncated_normal;

use super::l1::laplace_oracle_mixture;
use super::{check_oracle_args, ProxOracle};

pub const DEFAULT_GRID_RESOLUTION: usize = 512;

/// Treat a group center below this norm as sitting at the origin.
const RADIAL_FALLBACK_NORM: f64 = 1e-10;

pub struct GroupLassoOracle {
    dim: usize,
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    grid_resolution: usize,
    grids: Mutex<HashMap<GridKey, Arc<GroupGrid>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GridKey {
    group: usize,
    rho_bits: u64,
    eta_bits: u64,
}

impl GroupLassoOracle {
    pub fn new(
        dim: usize,
        groups: Vec<Vec<usize>>,
        weights: Vec<f64>,
        grid_resolution: usize,
    ) -> Result<Self> {
        if grid_resolution < 16 {
            return Err(Error::InvalidParameter(
                "grid resolution below 16 is useless".into(),
            ));
        }
        Ok(Self {
            dim,
            groups,
            weights,
            grid_resolution,
            grids: Mutex::new(HashMap::new()),
        })
    }

    fn grid_for(&self, group: usize, rho: f64, eta: f64) -> Result<Arc<GroupGrid>> {
        let key = GridKey {
            group,
            rho_bits: rho.to_bits(),
            eta_bits: eta.to_bits(),
        };
        if let Some(grid) = self.grids.lock().unwrap().get(&key) {
            return Ok(grid.clone());
        }
        let built = Arc::new(GroupGrid::build(
            rho,
            eta,
            self.weights[group],
            self.groups[group].len(),
            self.grid_resolution,
        )?);
        let mut cache = self.grids.lock().unwrap();
        if cache.len() >= 128 {
            cache.clear();
        }
        cache.insert(key, built.clone());
        Ok(built)
    }
}

impl ProxOracle for GroupLassoOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, u: &[f64], eta: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
        check_oracle_args(self.dim, u, eta)?;
        let mut out = vec![0.0; self.dim];
        for (gi, (group, &w)) in self.groups.iter().zip(&self.weights).enumerate() {
            let center: Vec<f64> = group.iter().map(|&i| u[i]).collect();
            let draw = if group.len() == 1 {
                let mixture = laplace_oracle_mixture(center[0], eta, w);
                let y = if rng.uniform() < mixture.weight_plus {
                    sample_truncated_normal(&mixture.tn_plus, rng)
                } else {
                    sample_truncated_normal(&mixture.tn_minus, rng)
                };
                vec![y]
            } else {
                let rho = norm2(&center);
                if rho < RADIAL_FALLBACK_NORM {
                    sample_radial(group.len(), eta, w, rng)?
                } else {
                    let grid = self.grid_for(gi, rho, eta)?;
                    sample_from_grid(&grid, &center, rho, rng)?
                }
            };
            for (&i, &v) in group.iter().zip(&draw) {
                out[i] = v;
            }
        }
        Ok(out)
    }

    fn log_partition(&self, u: &[f64], eta: f64) -> Result<f64> {
        check_oracle_args(self.dim, u, eta)?;
        let mut total = 0.0;
        for (group, &w) in self.groups.iter().zip(&self.weights) {
            let center: Vec<f64> = group.iter().map(|&i| u[i]).collect();
            total += group_log_partition(&center, eta, w)?;
        }
        Ok(total)
    }
}

/// One draw from the single-group density
/// `exp(-||y - x_center||^2 / (4 eta) - weight * ||y||)` for a group of
/// dimension >= 2. Builds a fresh grid, so batch users should prefer
/// [`GroupLassoOracle`], which caches grids per `(center norm, eta)`.
pub fn group_lasso_oracle_sample(
    x_center: &[f64],
    eta: f64,
    weight: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let dg = x_center.len();
    if dg < 2 {
        return Err(Error::InvalidParameter(
            "group dimension must be at least 2; use the l1 oracle for scalars".into(),
        ));
    }
    check_oracle_args(dg, x_center, eta)?;
    let rho = norm2(x_center);
    if rho < RADIAL_FALLBACK_NORM {
        return sample_radial(dg, eta, weight, rng);
    }
    let grid = GroupGrid::build(rho, eta, weight, dg, DEFAULT_GRID_RESOLUTION)?;
    sample_from_grid(&grid, x_center, rho, rng)
}

/// Tabulated reduced density for one `(rho, eta, weight, d_g)`.
pub(crate) struct GroupGrid {
    rho: f64,
    eta: f64,
    weight: f64,
    dg: usize,
    r_nodes: Vec<f64>,
    marginal_t: CdfTable,
}

impl GroupGrid {
    fn log_q(&self, t: f64, r: f64) -> f64 {
        log_q(self.rho, self.eta, self.weight, self.dg, t, r)
    }

    fn build(rho: f64, eta: f64, weight: f64, dg: usize, resolution: usize) -> Result<Self> {
        let (t_lo, t_hi) = t_window(rho, eta, weight);
        let r_hi = r_window(eta, dg);
        let n = resolution;
        let t_nodes: Vec<f64> = (0..n)
            .map(|i| t_lo + (t_hi - t_lo) * i as f64 / (n - 1) as f64)
            .collect();
        let r_nodes: Vec<f64> = (0..n)
            .map(|i| r_hi * i as f64 / (n - 1) as f64)
            .collect();

        // log marginal of t: trapezoid over the r axis in log space
        let dr = r_nodes[1] - r_nodes[0];
        let mut marginal = Vec::with_capacity(n);
        let mut column = vec![f64::NEG_INFINITY; n];
        for &t in &t_nodes {
            for (slot, &r) in column.iter_mut().zip(&r_nodes) {
                *slot = log_q(rho, eta, weight, dg, t, r);
            }
            let peak = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut acc = 0.0;
            if peak > f64::NEG_INFINITY {
                for (i, &v) in column.iter().enumerate() {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    acc += w * (v - peak).exp();
                }
            }
            marginal.push(if acc > 0.0 {
                peak + (acc * dr).ln()
            } else {
                f64::NEG_INFINITY
            });
        }
        let marginal_t = CdfTable::from_log_density(t_nodes, &marginal)?;
        Ok(Self {
            rho,
            eta,
            weight,
            dg,
            r_nodes,
            marginal_t,
        })
    }

    /// Draw `(t, r)` by inverting the marginal then the conditional CDF.
    fn sample_tr(&self, rng: &mut RngStream) -> Result<(f64, f64)> {
        let t = self.marginal_t.inverse(rng.uniform());
        let logs: Vec<f64> = self.r_nodes.iter().map(|&r| self.log_q(t, r)).collect();
        let conditional = CdfTable::from_log_density(self.r_nodes.clone(), &logs)?;
        let r = conditional.inverse(rng.uniform());
        Ok((t, r))
    }
}

fn log_q(rho: f64, eta: f64, weight: f64, dg: usize, t: f64, r: f64) -> f64 {
    let radial = if dg > 2 {
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (dg as f64 - 2.0) * r.ln()
    } else {
        0.0
    };
    let dt = t - rho;
    radial - (dt * dt + r * r) / (4.0 * eta) - weight * (t * t + r * r).sqrt()
}

fn t_window(rho: f64, eta: f64, weight: f64) -> (f64, f64) {
    let half = 12.0 * (2.0 * eta).sqrt() + 2.0 * eta * weight;
    (rho - half, rho + half)
}

fn r_window(eta: f64, dg: usize) -> f64 {
    (2.0 * eta).sqrt() * ((dg as f64).sqrt() + 12.0)
}

/// Uniform direction on the unit sphere of the hyperplane orthogonal to
/// `xhat`.
fn unit_orthogonal(xhat: &[f64], rng: &mut RngStream) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..xhat.len()).map(|_| rng.standard_normal()).collect();
        let along = crate::math::dot(&v, xhat);
        for (vi, &xi) in v.iter_mut().zip(xhat) {
            *vi -= along * xi;
        }
        let n = norm2(&v);
        if n > 1e-12 {
            for vi in v.iter_mut() {
                *vi /= n;
            }
            return v;
        }
    }
}

fn sample_from_grid(
    grid: &GroupGrid,
    center: &[f64],
    rho: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let (t, r) = grid.sample_tr(rng)?;
    let xhat: Vec<f64> = center.iter().map(|&c| c / rho).collect();
    let v = unit_orthogonal(&xhat, rng);
    Ok(xhat
        .iter()
        .zip(&v)
        .map(|(&x, &vi)| t * x + r * vi)
        .collect())
}

/// Spherically symmetric draw for a group centered at the origin.
fn sample_radial(dg: usize, eta: f64, w: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    let shape = dg as f64 - 1.0;
    let log_density = move |r: f64| {
        if r <= 0.0 {
            f64::NEG_INFINITY
        } else {
            shape * r.ln() - r * r / (4.0 * eta) - w * r
        }
    };
    // mode of the radial density from its stationarity condition
    let hint = -eta * w + (eta * eta * w * w + 2.0 * eta * shape).sqrt();
    let r = sample_logconcave_1d(log_density, hint.max(1e-3), rng)?;
    let mut v: Vec<f64> = (0..dg).map(|_| rng.standard_normal()).collect();
    let n = norm2(&v);
    if n < 1e-12 {
        return sample_radial(dg, eta, w, rng);
    }
    for vi in v.iter_mut() {
        *vi *= r / n;
    }
    Ok(v)
}

/// log of the single-group partition function.
pub(crate) fn group_log_partition(center: &[f64], eta: f64, w: f64) -> Result<f64> {
    let dg = center.len();
    if dg == 1 {
        return Ok(super::l1::laplace_log_partition_1d(center[0], eta, w));
    }
    let rho = norm2(center);
    let r_hi = r_window(eta, dg);
    if rho < RADIAL_FALLBACK_NORM {
        let shape = dg as f64 - 1.0;
        let cfg = Quadrature1DConfig {
            rel_tol: 1e-9,
            window: IntegrationWindow::Explicit { lo: 0.0, hi: r_hi },
            ..Default::default()
        };
        let radial = quadrature_1d(
            move |r: f64| {
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * r.ln() - r * r / (4.0 * eta) - w * r
                }
            },
            &cfg,
        )?;
        return Ok(log_sphere_surface(dg - 1) + radial.log_integral);
    }

    // nested adaptive quadrature: the outer integrand over t is the log of
    // the inner integral over r
    let (t_lo, t_hi) = t_window(rho, eta, w);
    let inner_cfg = Quadrature1DConfig {
        rel_tol: 1e-10,
        window: IntegrationWindow::Explicit { lo: 0.0, hi: r_hi },
        ..Default::default()
    };
    let outer_cfg = Quadrature1DConfig {
        rel_tol: 1e-9,
        window: IntegrationWindow::Explicit { lo: t_lo, hi: t_hi },
        breakpoints: vec![0.0],
        ..Default::default()
    };
    let outer = quadrature_1d(
        |t: f64| {
            quadrature_1d(|r: f64| log_q(rho, eta, w, dg, t, r), &inner_cfg)
                .map(|res| res.log_integral)
                .unwrap_or(f64::NEG_INFINITY)
        },
        &outer_cfg,
    )?;
    Ok(log_sphere_surface(dg - 2) + outer.log_integral)
}
