//! Ground-truth grids and statistical verification utilities.
//!
//! Everything here exists to check samplers against something independent:
//! quadrature-normalized density tables on low-dimensional grids, total
//! variation against those tables, effective sample sizes, Monte Carlo checks
//! of the one-step moment bounds, and a many-chain mixing-time estimator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, norm2};
use crate::oracle::ProxOracle;
use crate::rng::RngStream;
use crate::sampler::{run_chain_indexed, ChainRun, SamplerConfig};
use crate::target::CompositeTarget;
use crate::tuning::tail_radius;

/// Quadrature-normalized density table on a 1D or 2D grid of cell centers.
#[derive(Debug, Clone)]
pub struct GroundTruthGrid {
    pub ranges: Vec<(f64, f64)>,
    pub bins: Vec<usize>,
    /// Unnormalized log density at cell centers, row-major for 2D.
    pub log_density: Vec<f64>,
    /// log of `sum_cells exp(log_density) * cell_volume`.
    pub log_normalizer: f64,
}

impl GroundTruthGrid {
    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.ranges
            .iter()
            .zip(&self.bins)
            .map(|((lo, hi), &b)| (hi - lo) / b as f64)
            .product()
    }

    pub fn n_cells(&self) -> usize {
        self.bins.iter().product()
    }

    /// Normalized mass of every cell; sums to one.
    pub fn masses(&self) -> Vec<f64> {
        let log_vol = self.cell_volume().ln();
        self.log_density
            .iter()
            .map(|&ld| (ld + log_vol - self.log_normalizer).exp())
            .collect()
    }

    /// Flat cell index containing `point`, if inside the grid.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        let mut idx = 0usize;
        for (k, ((lo, hi), &b)) in self.ranges.iter().zip(&self.bins).enumerate() {
            let v = point[k];
            if v < *lo || v >= *hi {
                return None;
            }
            let cell = (((v - lo) / (hi - lo)) * b as f64) as usize;
            idx = idx * b + cell.min(b - 1);
        }
        Some(idx)
    }

    fn centers_1d(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = self.ranges[axis];
        let b = self.bins[axis];
        let h = (hi - lo) / b as f64;
        (0..b).map(|i| lo + (i as f64 + 0.5) * h).collect()
    }

    /// Mean along one axis under the grid measure.
    pub fn mean(&self, axis: usize) -> f64 {
        let masses = self.masses();
        let mut acc = 0.0;
        for (idx, m) in masses.iter().enumerate() {
            acc += m * self.center_coordinate(idx, axis);
        }
        acc
    }

    pub fn variance(&self, axis: usize) -> f64 {
        let mu = self.mean(axis);
        let masses = self.masses();
        let mut acc = 0.0;
        for (idx, m) in masses.iter().enumerate() {
            let c = self.center_coordinate(idx, axis) - mu;
            acc += m * c * c;
        }
        acc
    }

    fn center_coordinate(&self, flat: usize, axis: usize) -> f64 {
        let (lo, hi) = self.ranges[axis];
        let b = self.bins[axis];
        let h = (hi - lo) / b as f64;
        let cell = if self.dims() == 1 {
            flat
        } else if axis == 0 {
            flat / self.bins[1]
        } else {
            flat % self.bins[1]
        };
        lo + (cell as f64 + 0.5) * h
    }

    /// Marginal of a 2D grid onto one axis, as a 1D grid of cell masses.
    pub fn marginal(&self, axis: usize) -> Result<GroundTruthGrid> {
        if self.dims() != 2 {
            return Err(Error::InvalidParameter(
                "marginal is defined for 2D grids".into(),
            ));
        }
        let b_keep = self.bins[axis];
        let b_other = self.bins[1 - axis];
        let mut log_marginal = vec![f64::NEG_INFINITY; b_keep];
        let mut scratch = vec![f64::NEG_INFINITY; b_other];
        for i in 0..b_keep {
            for j in 0..b_other {
                let flat = if axis == 0 {
                    i * self.bins[1] + j
                } else {
                    j * self.bins[1] + i
                };
                scratch[j] = self.log_density[flat];
            }
            log_marginal[i] = log_sum_exp(&scratch);
        }
        let (lo, hi) = self.ranges[axis];
        let h_keep = (hi - lo) / b_keep as f64;
        let log_normalizer = log_sum_exp(&log_marginal) + h_keep.ln();
        Ok(GroundTruthGrid {
            ranges: vec![(lo, hi)],
            bins: vec![b_keep],
            log_density: log_marginal,
            log_normalizer,
        })
    }

    /// CDF table of a 1D grid, for inverse-CDF sampling in tests.
    pub fn cdf_table(&self) -> Result<crate::pchip::CdfTable> {
        if self.dims() != 1 {
            return Err(Error::InvalidParameter(
                "cdf table is defined for 1D grids".into(),
            ));
        }
        crate::pchip::CdfTable::from_log_density(self.centers_1d(0), &self.log_density)
    }

    /// Accumulate the grid masses into a coarser 1D histogram over the same
    /// range.
    pub fn coarse_masses(&self, n_bins: usize) -> Result<Vec<f64>> {
        if self.dims() != 1 {
            return Err(Error::InvalidParameter(
                "coarse histogram is defined for 1D grids".into(),
            ));
        }
        let (lo, hi) = self.ranges[0];
        let masses = self.masses();
        let mut out = vec![0.0; n_bins];
        for (i, &c) in self.centers_1d(0).iter().enumerate() {
            let b = (((c - lo) / (hi - lo)) * n_bins as f64) as usize;
            out[b.min(n_bins - 1)] += masses[i];
        }
        Ok(out)
    }
}

/// Quadrature-normalized table of `pi ~ exp(-f - g)` at cell centers.
///
/// The ranges must enclose the high-probability region: each half-width
/// around the dissipativity center has to be at least the tail radius at
/// mass defect 1e-10.
pub fn build_ground_truth(
    target: &CompositeTarget,
    ranges: &[(f64, f64)],
    bins: &[usize],
) -> Result<GroundTruthGrid> {
    let dims = target.dim();
    if dims > 2 {
        return Err(Error::Unsupported(
            "ground truth grids cover 1D and 2D targets only".into(),
        ));
    }
    if ranges.len() != dims || bins.len() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            got: ranges.len().max(bins.len()),
        });
    }
    if bins.iter().any(|&b| b < 2) || ranges.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::InvalidParameter(
            "grid needs at least two bins per axis and non-empty ranges".into(),
        ));
    }
    let required = tail_radius(target, 1e-10, 1.0);
    for (k, (lo, hi)) in ranges.iter().enumerate() {
        let c = target.dissip_center[k];
        if c - lo < required || hi - c < required {
            return Err(Error::RangeCoverage {
                required_half_width: required,
            });
        }
    }

    let mut log_density = Vec::with_capacity(bins.iter().product());
    match dims {
        1 => {
            let (lo, hi) = ranges[0];
            let h = (hi - lo) / bins[0] as f64;
            for i in 0..bins[0] {
                let x = [lo + (i as f64 + 0.5) * h];
                log_density.push(-target.eval_u(&x)?);
            }
        }
        _ => {
            let (lo0, hi0) = ranges[0];
            let (lo1, hi1) = ranges[1];
            let h0 = (hi0 - lo0) / bins[0] as f64;
            let h1 = (hi1 - lo1) / bins[1] as f64;
            for i in 0..bins[0] {
                for j in 0..bins[1] {
                    let x = [lo0 + (i as f64 + 0.5) * h0, lo1 + (j as f64 + 0.5) * h1];
                    log_density.push(-target.eval_u(&x)?);
                }
            }
        }
    }
    let cell_vol: f64 = ranges
        .iter()
        .zip(bins)
        .map(|((lo, hi), &b)| (hi - lo) / b as f64)
        .product();
    let log_normalizer = log_sum_exp(&log_density) + cell_vol.ln();
    Ok(GroundTruthGrid {
        ranges: ranges.to_vec(),
        bins: bins.to_vec(),
        log_density,
        log_normalizer,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TvEstimate {
    pub tv: f64,
    pub off_grid_fraction: f64,
    /// Set when more than 1% of the samples fell outside the grid.
    pub off_grid_warning: bool,
}

/// Histogram TV between samples and the grid truth. Off-grid samples count
/// against the empirical in-grid mass and are reported.
pub fn empirical_tv<'a, I>(samples: I, grid: &GroundTruthGrid) -> Result<TvEstimate>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut counts = vec![0.0f64; grid.n_cells()];
    let mut total = 0usize;
    let mut inside = 0usize;
    for s in samples {
        total += 1;
        if let Some(idx) = grid.locate(s) {
            counts[idx] += 1.0;
            inside += 1;
        }
    }
    if inside < 1_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 in-grid samples for a TV estimate, got {inside}"
        )));
    }
    let n = total as f64;
    let truth = grid.masses();
    let mut tv = 0.0;
    for (c, t) in counts.iter().zip(&truth) {
        tv += (c / n - t).abs();
    }
    // mass the empirical distribution parks outside the grid
    tv += (total - inside) as f64 / n;
    let off = (total - inside) as f64 / n;
    Ok(TvEstimate {
        tv: 0.5 * tv,
        off_grid_fraction: off,
        off_grid_warning: off > 0.01,
    })
}

/// TV between two histograms over the same cells.
pub fn tv_between_histograms(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

/// Effective sample size with Geyer's initial-positive-sequence truncation:
/// autocorrelations are summed in consecutive pairs until a pair sum turns
/// negative.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 100 {
        return Err(Error::InvalidParameter(format!(
            "effective sample size needs at least 100 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / nf;
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::DegenerateSeries(
            "series has zero variance".into(),
        ));
    }
    let autocorr = |k: usize| -> f64 {
        let mut acc = 0.0;
        for t in 0..n - k {
            acc += centered[t] * centered[t + k];
        }
        acc / (nf * c0)
    };

    // tau = -1 + 2 * sum of positive pair sums (rho_0 + rho_1), (rho_2 + rho_3), ...
    let mut tau = -1.0;
    let mut k = 0usize;
    while k + 1 < n {
        let pair = autocorr(k) + autocorr(k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    Ok(n as f64 / tau.max(1e-12))
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub observed: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &'static str, observed: f64, bound: f64, slack: f64) -> Self {
        Self {
            name,
            observed,
            bound,
            slack,
            pass: observed <= bound + slack,
        }
    }

    /// Margin left before the bound is violated (negative = failed).
    pub fn margin(&self) -> f64 {
        self.bound + self.slack - self.observed
    }
}

#[derive(Debug, Clone)]
pub struct LemmaCheckReport {
    /// `||E Y - x|| <= eta (M_d + ||grad f(x)||)`.
    pub proposal_bias: CheckResult,
    /// `Var(<v, Y>) <= 2 eta` for random unit directions.
    pub directional_variance: Vec<CheckResult>,
    /// `E ||Y - x||^2 <= 12 eta d + 36 eta^2 (||grad f(x)||^2 + M_d^2)`.
    pub second_moment: CheckResult,
}

impl LemmaCheckReport {
    pub fn all_pass(&self) -> bool {
        self.proposal_bias.pass
            && self.second_moment.pass
            && self.directional_variance.iter().all(|c| c.pass)
    }
}

/// Monte Carlo check of the one-step moment bounds at a fixed point.
///
/// Requires `eta < 1 / (16 (L + 1))`, the hypothesis of the second-moment
/// bound.
pub fn lemma_bound_checks(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    x: &[f64],
    eta: f64,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<LemmaCheckReport> {
    let l = target.smoothness_l;
    if !(eta < 1.0 / (16.0 * (l + 1.0))) {
        return Err(Error::InvalidParameter(format!(
            "moment bounds need eta < 1/(16 (L + 1)) = {}, got {eta}",
            1.0 / (16.0 * (l + 1.0))
        )));
    }
    if n_samples < 100 {
        return Err(Error::InvalidParameter(
            "at least 100 samples are required".into(),
        ));
    }
    let d = target.dim();
    let grad = target.f_grad(x)?;
    let grad_norm = norm2(&grad);
    let center = crate::math::axpy(x, -eta, &grad);

    // ten random unit directions, drawn before the samples so the stream
    // layout is stable
    let mut directions = Vec::with_capacity(10);
    for _ in 0..10 {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let nv = norm2(&v);
            if nv > 1e-12 {
                directions.push(v.iter().map(|c| c / nv).collect::<Vec<f64>>());
                break;
            }
        }
    }

    let nf = n_samples as f64;
    let mut sum = vec![0.0f64; d];
    let mut sum_sq = vec![0.0f64; d];
    let mut dir_sum = vec![0.0f64; 10];
    let mut dir_sum_sq = vec![0.0f64; 10];
    let mut r2_sum = 0.0f64;
    let mut r2_sum_sq = 0.0f64;
    for _ in 0..n_samples {
        let y = oracle.sample(&center, eta, rng)?;
        let mut r2 = 0.0;
        for j in 0..d {
            sum[j] += y[j];
            sum_sq[j] += y[j] * y[j];
            let dxj = y[j] - x[j];
            r2 += dxj * dxj;
        }
        r2_sum += r2;
        r2_sum_sq += r2 * r2;
        for (k, v) in directions.iter().enumerate() {
            let p = crate::math::dot(v, &y);
            dir_sum[k] += p;
            dir_sum_sq[k] += p * p;
        }
    }

    // bias of the proposal mean around the current point
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let bias = norm2(&crate::math::sub(&mean, x));
    let mean_var_total: f64 = (0..d)
        .map(|j| (sum_sq[j] / nf - mean[j] * mean[j]).max(0.0))
        .sum();
    let bias_slack = 3.0 * (mean_var_total / nf).sqrt();
    let bias_bound = eta * (target.lipschitz_md + grad_norm);
    let proposal_bias = CheckResult::new("proposal-mean-bias", bias, bias_bound, bias_slack);

    let directional_variance = (0..10)
        .map(|k| {
            let m = dir_sum[k] / nf;
            let var = (dir_sum_sq[k] / nf - m * m) * nf / (nf - 1.0);
            let slack = 3.0 * var * (2.0 / (nf - 1.0)).sqrt();
            CheckResult::new("directional-variance", var, 2.0 * eta, slack)
        })
        .collect();

    let m2 = r2_sum / nf;
    let m2_var = (r2_sum_sq / nf - m2 * m2).max(0.0);
    let m2_slack = 3.0 * (m2_var / nf).sqrt();
    let m2_bound = 12.0 * eta * d as f64
        + 36.0 * eta * eta * (grad_norm * grad_norm + target.lipschitz_md * target.lipschitz_md);
    let second_moment = CheckResult::new("second-moment", m2, m2_bound, m2_slack);

    Ok(LemmaCheckReport {
        proposal_bias,
        directional_variance,
        second_moment,
    })
}

/// Largest relative violation of the detailed-balance identity
/// `pi(x) p(x, z) a(x, z) = pi(z) p(z, x) a(z, x)` over random pairs, with
/// `z` drawn from the proposal at `x` and everything evaluated unnormalized
/// in log space.
pub fn detailed_balance_max_violation(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    eta: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = RngStream::root(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_pairs {
        let x: Vec<f64> = target
            .dissip_center
            .iter()
            .map(|&c| c + 1.5 * rng.standard_normal())
            .collect();
        let state_x = crate::sampler::ChainState::new(target, oracle, x.clone(), eta)?;
        let z = oracle.sample(&state_x.shifted_center(eta), eta, &mut rng)?;
        let state_z = crate::sampler::ChainState::new(target, oracle, z.clone(), eta)?;

        let forward = -target.eval_u(&x)?
            + crate::sampler::proposal_log_density(target, oracle, &x, &z, eta)?
            + crate::sampler::log_accept_ratio(target, oracle, &state_x, &z, eta)?;
        let backward = -target.eval_u(&z)?
            + crate::sampler::proposal_log_density(target, oracle, &z, &x, eta)?
            + crate::sampler::log_accept_ratio(target, oracle, &state_z, &x, eta)?;
        worst = worst.max((forward - backward).abs());
    }
    Ok(worst)
}

/// Summary metrics for a batch of chains.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainMetrics {
    /// Accepted transitions over non-lazy steps.
    pub acceptance_rate: f64,
    /// Per-coordinate effective sample size, summed over chains.
    pub ess_per_coordinate: Vec<f64>,
    pub tv_to_truth: Option<f64>,
    pub off_grid_fraction: Option<f64>,
}

impl ChainMetrics {
    pub fn from_runs(
        runs: &[ChainRun],
        grid: Option<&GroundTruthGrid>,
        burn_in: usize,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidParameter("no chains to summarize".into()));
        }
        let dim = runs[0].samples[0].len();
        let mut accepted = 0usize;
        let mut moves = 0usize;
        for run in runs {
            for s in &run.summaries {
                if !s.was_lazy_hold {
                    moves += 1;
                    if s.accepted {
                        accepted += 1;
                    }
                }
            }
        }
        let acceptance_rate = accepted as f64 / moves.max(1) as f64;

        let mut ess_per_coordinate = vec![0.0; dim];
        for run in runs {
            for (j, slot) in ess_per_coordinate.iter_mut().enumerate() {
                let series: Vec<f64> = run
                    .samples
                    .iter()
                    .skip(burn_in)
                    .map(|row| row[j])
                    .collect();
                *slot += effective_sample_size(&series).unwrap_or(0.0);
            }
        }

        let (tv_to_truth, off_grid_fraction) = match grid {
            Some(grid) => {
                let all: Vec<&[f64]> = runs
                    .iter()
                    .flat_map(|r| r.samples.iter().skip(burn_in).map(|v| v.as_slice()))
                    .collect();
                let est = empirical_tv(all.into_iter(), grid)?;
                (Some(est.tv), Some(est.off_grid_fraction))
            }
            None => (None, None),
        };
        Ok(Self {
            acceptance_rate,
            ess_per_coordinate,
            tv_to_truth,
            off_grid_fraction,
        })
    }
}

/// Configuration of the many-chain mixing-time estimator.
#[derive(Debug, Clone)]
pub struct MixingConfig {
    pub n_chains: usize,
    /// Coarse histogram resolution used for the across-chain TV. Keep small:
    /// the sampling noise floor of the TV estimate is about
    /// `sqrt(bins / (2 pi n_chains))`.
    pub histogram_bins: usize,
    pub tv_threshold: f64,
    pub check_every: u64,
    pub max_steps: u64,
    /// Coordinate whose marginal is tracked.
    pub coordinate: usize,
    /// Independent replications; the reported iteration count is their
    /// median.
    pub n_groups: usize,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self {
            n_chains: 200,
            histogram_bins: 10,
            tv_threshold: 0.1,
            check_every: 5,
            max_steps: 4000,
            coordinate: 0,
            n_groups: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixingEstimate {
    /// First checkpoint (in steps) at which the across-chain marginal TV
    /// dropped to the threshold; median over groups. `None` when a group
    /// never crossed within the step budget.
    pub iterations_to_threshold: Option<u64>,
    /// `(step, tv)` trace of the first group.
    pub tv_trace: Vec<(u64, f64)>,
}

/// Estimate how many iterations the chain needs until the marginal law of
/// the tracked coordinate is within `tv_threshold` of the truth, measured
/// across independent chains at each checkpoint.
pub fn estimate_mixing_iterations(
    target: &CompositeTarget,
    oracle: &dyn ProxOracle,
    base: &SamplerConfig,
    marginal_truth: &GroundTruthGrid,
    cfg: &MixingConfig,
) -> Result<MixingEstimate> {
    if marginal_truth.dims() != 1 {
        return Err(Error::InvalidParameter(
            "mixing estimator needs a 1D marginal truth grid".into(),
        ));
    }
    let truth = marginal_truth.coarse_masses(cfg.histogram_bins)?;
    let (lo, hi) = marginal_truth.ranges[0];
    let n_checks = (cfg.max_steps / cfg.check_every) as usize;
    let mut config = base.clone();
    config.n_steps = cfg.check_every * n_checks as u64;

    let mut group_results = Vec::with_capacity(cfg.n_groups);
    let mut first_trace = Vec::new();
    for group in 0..cfg.n_groups {
        // chain indices partition the stream space across groups
        let offset = (group * cfg.n_chains) as u64;
        let values: Vec<Vec<f64>> = (0..cfg.n_chains)
            .into_par_iter()
            .map(|c| {
                let run = run_chain_indexed(target, oracle, &config, offset + c as u64)?;
                Ok((0..n_checks)
                    .map(|k| run.samples[(k + 1) * cfg.check_every as usize][cfg.coordinate])
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;

        let mut crossed = None;
        let mut trace = Vec::with_capacity(n_checks);
        for k in 0..n_checks {
            let mut hist = vec![0.0f64; cfg.histogram_bins];
            let mut off = 0.0;
            for chain_values in &values {
                let v = chain_values[k];
                if v < lo || v >= hi {
                    off += 1.0;
                } else {
                    let b = (((v - lo) / (hi - lo)) * cfg.histogram_bins as f64) as usize;
                    hist[b.min(cfg.histogram_bins - 1)] += 1.0;
                }
            }
            let n = cfg.n_chains as f64;
            let mut tv = off / n;
            for (h, t) in hist.iter().zip(&truth) {
                tv += (h / n - t).abs();
            }
            let tv = 0.5 * tv;
            let steps = (k as u64 + 1) * cfg.check_every;
            trace.push((steps, tv));
            if crossed.is_none() && tv <= cfg.tv_threshold {
                crossed = Some(steps);
            }
        }
        if group == 0 {
            first_trace = trace;
        }
        group_results.push(crossed);
    }

    let iterations = if group_results.iter().any(|r| r.is_none()) {
        None
    } else {
        let mut xs: Vec<u64> = group_results.into_iter().map(|r| r.unwrap()).collect();
        xs.sort_unstable();
        Some(xs[xs.len() / 2])
    };
    Ok(MixingEstimate {
        iterations_to_threshold: iterations,
        tv_trace: first_trace,
    })
}
