//! Adaptive 1D quadrature for integrands supplied in log form.
//!
//! The integrands here are unnormalized log densities whose values can span
//! hundreds of orders of magnitude, so every accumulation happens in log
//! space: a segment's Gauss-Kronrod sum is reduced with log-sum-exp against
//! the segment's peak, and segment totals are combined the same way. The
//! returned value is `log of the integral of exp(log_integrand)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::math::{log_add_exp, log_sum_exp};

/// 15-point Kronrod abscissae on [-1, 1] (positive half; the rule is
/// symmetric). Even indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Where to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrationWindow {
    /// Fixed interval.
    Explicit { lo: f64, hi: f64 },
    /// Start from `[center - half_width, center + half_width]` and double the
    /// half-width until the endpoint values are negligible against the peak.
    AutoExpand { center: f64, initial_half_width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature1DConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub window: IntegrationWindow,
    /// Known non-smooth points of the integrand. Each one inside the window
    /// becomes a segment boundary, so no quadrature panel ever straddles a
    /// kink; a kink hiding inside a panel between nodes is invisible to the
    /// error estimate.
    pub breakpoints: Vec<f64>,
}

impl Default for Quadrature1DConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
            window: IntegrationWindow::AutoExpand {
                center: 0.0,
                initial_half_width: 1.0,
            },
            breakpoints: Vec::new(),
        }
    }
}

impl Quadrature1DConfig {
    pub fn with_window(window: IntegrationWindow) -> Self {
        Self {
            window,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub log_integral: f64,
    /// Estimated relative error actually achieved.
    pub achieved_rel_tol: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    log_kronrod: f64,
    log_err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.log_err == other.log_err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_err
            .partial_cmp(&other.log_err)
            .unwrap_or(Ordering::Equal)
    }
}

/// One Gauss-Kronrod pass over [lo, hi] in log space. Returns the K15
/// log-integral and a log error estimate.
///
/// Within the segment everything is computed in linear space relative to the
/// peak node value, which keeps the sums in [0, 15]; only the final results
/// carry the log offset. The error estimate applies the QUADPACK rescaling
/// `resasc * min(1, (200 |K - G| / resasc)^1.5)`: the raw `|K - G|` badly
/// underestimates the true error on unresolved or kinked segments, and the
/// variation measure `resasc` (the K15 integral of |f - mean|) catches that.
fn gauss_kronrod_log(log_f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let mut logs = [f64::NEG_INFINITY; 15];
    let mut idx = 0;
    let mut nodes = [0.0f64; 15];
    for (i, &x) in XGK.iter().enumerate() {
        if i == 7 {
            nodes[idx] = center;
            idx += 1;
        } else {
            nodes[idx] = center - half * x;
            nodes[idx + 1] = center + half * x;
            idx += 2;
        }
    }
    for (slot, &y) in logs.iter_mut().zip(nodes.iter()) {
        *slot = log_f(y);
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Segment {
            lo,
            hi,
            log_kronrod: f64::NEG_INFINITY,
            log_err: f64::NEG_INFINITY,
        };
    }

    // node values relative to the peak, folded pairwise (same weight)
    let mut values = [0.0f64; 8];
    let mut idx = 0;
    for (i, slot) in values.iter_mut().enumerate() {
        if i == 7 {
            *slot = (logs[idx] - peak).exp();
        } else {
            *slot = (logs[idx] - peak).exp() + (logs[idx + 1] - peak).exp();
            idx += 2;
        }
    }

    let mut kron = 0.0f64;
    let mut gauss = 0.0f64;
    for (i, (&wk, &v)) in WGK.iter().zip(values.iter()).enumerate() {
        kron += wk * v;
        if i == 7 {
            gauss += WG[3] * v;
        } else if i % 2 == 1 {
            gauss += WG[i / 2] * v;
        }
    }

    // variation around the mean value (the mean integrates to kron)
    let mean = 0.5 * kron;
    let mut resasc = 0.0f64;
    let mut idx = 0;
    for (i, &wk) in WGK.iter().enumerate() {
        if i == 7 {
            resasc += wk * ((logs[idx] - peak).exp() - mean).abs();
            idx += 1;
        } else {
            resasc += wk * ((logs[idx] - peak).exp() - mean).abs();
            resasc += wk * ((logs[idx + 1] - peak).exp() - mean).abs();
            idx += 2;
        }
    }

    let raw_err = (kron - gauss).abs();
    let mut err = if resasc > 0.0 && raw_err > 0.0 {
        resasc * (200.0 * raw_err / resasc).powf(1.5).min(1.0)
    } else {
        raw_err
    };
    // round-off floor
    err = err.max(50.0 * f64::EPSILON * kron);

    let log_scale = peak + half.ln();
    Segment {
        lo,
        hi,
        log_kronrod: if kron > 0.0 {
            log_scale + kron.ln()
        } else {
            f64::NEG_INFINITY
        },
        log_err: if err > 0.0 {
            log_scale + err.ln()
        } else {
            f64::NEG_INFINITY
        },
    }
}

/// Expand an auto window until both endpoints are negligible relative to the
/// observed peak. The integrands we care about are unimodal up to kinks, so a
/// coarse scan is enough to track the peak.
fn resolve_window(log_f: &dyn Fn(f64) -> f64, window: IntegrationWindow) -> Result<(f64, f64)> {
    match window {
        IntegrationWindow::Explicit { lo, hi } => {
            if !(lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "integration window [{lo}, {hi}] is empty"
                )));
            }
            Ok((lo, hi))
        }
        IntegrationWindow::AutoExpand {
            center,
            initial_half_width,
        } => {
            let mut half = initial_half_width.max(1e-8);
            for _ in 0..64 {
                let mut peak = f64::NEG_INFINITY;
                let n = 65;
                for i in 0..=n {
                    let y = center - half + 2.0 * half * (i as f64) / (n as f64);
                    peak = peak.max(log_f(y));
                }
                if peak == f64::NEG_INFINITY {
                    half *= 2.0;
                    continue;
                }
                let lo_val = log_f(center - half);
                let hi_val = log_f(center + half);
                if lo_val <= peak - 150.0 && hi_val <= peak - 150.0 {
                    return Ok((center - half, center + half));
                }
                half *= 2.0;
            }
            Err(Error::InvalidParameter(
                "auto window expansion failed; integrand tail does not decay".into(),
            ))
        }
    }
}

/// Adaptive Gauss-Kronrod integration of `exp(log_integrand)`.
pub fn quadrature_1d(
    log_integrand: impl Fn(f64) -> f64,
    config: &Quadrature1DConfig,
) -> Result<QuadratureResult> {
    config.validate()?;
    let log_f: &dyn Fn(f64) -> f64 = &log_integrand;
    let (lo, hi) = resolve_window(log_f, config.window)?;

    // Seed with uniform segments plus a boundary at every declared
    // breakpoint, so narrow peaks are found and kinks always sit on segment
    // edges.
    let initial = 16usize;
    let width = (hi - lo) / initial as f64;
    let mut boundaries: Vec<f64> = (0..=initial).map(|i| lo + i as f64 * width).collect();
    boundaries[initial] = hi;
    for &bp in &config.breakpoints {
        if bp > lo && bp < hi {
            boundaries.push(bp);
        }
    }
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    boundaries.dedup();

    let mut heap = BinaryHeap::new();
    for pair in boundaries.windows(2) {
        if pair[1] > pair[0] {
            heap.push(gauss_kronrod_log(log_f, pair[0], pair[1]));
        }
    }

    let mut subdivisions = heap.len();
    loop {
        let mut logs: Vec<f64> = Vec::with_capacity(heap.len());
        let mut errs: Vec<f64> = Vec::with_capacity(heap.len());
        for seg in heap.iter() {
            logs.push(seg.log_kronrod);
            errs.push(seg.log_err);
        }
        let log_total = log_sum_exp(&logs);
        let log_err_total = log_sum_exp(&errs);

        let log_tol = log_add_exp(config.abs_tol.ln(), config.rel_tol.ln() + log_total);
        let achieved = if log_total == f64::NEG_INFINITY {
            0.0
        } else {
            (log_err_total - log_total).exp()
        };

        if log_err_total <= log_tol || log_total == f64::NEG_INFINITY {
            return Ok(QuadratureResult {
                log_integral: log_total,
                achieved_rel_tol: achieved,
                subdivisions,
            });
        }
        if subdivisions >= config.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                best_log_integral: log_total,
                achieved_rel_tol: achieved,
                subdivisions,
            });
        }

        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval at floating point resolution; keep its estimate as is
            let mut pinned = worst;
            pinned.log_err = f64::NEG_INFINITY;
            heap.push(pinned);
            continue;
        }
        heap.push(gauss_kronrod_log(log_f, worst.lo, mid));
        heap.push(gauss_kronrod_log(log_f, mid, worst.hi));
        subdivisions += 1;
    }
}
