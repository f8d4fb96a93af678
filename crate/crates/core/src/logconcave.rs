//! Black-box rejection sampling from 1D log-concave densities.
//!
//! The envelope is built per call from function evaluations only: locate the
//! mode, measure where the log density has dropped by about one unit on each
//! side, and cover the density with a flat cap between the drop points plus
//! two exponential tails whose slopes come from secants. For a concave log
//! density a secant through two points lies above the function outside the
//! chord, so the envelope dominates by construction; a draw that lands above
//! the envelope is proof the input was not log-concave and is reported as
//! such.

use crate::error::{Error, Result};
use crate::rng::RngStream;

const MAX_ATTEMPTS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct LogConcaveStats {
    pub mode: f64,
    pub attempts: u64,
}

pub fn sample_logconcave_1d(
    log_density: impl Fn(f64) -> f64,
    mode_hint: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    sample_logconcave_1d_with_stats(log_density, mode_hint, rng).map(|(y, _)| y)
}

pub fn sample_logconcave_1d_with_stats(
    log_density: impl Fn(f64) -> f64,
    mode_hint: f64,
    rng: &mut RngStream,
) -> Result<(f64, LogConcaveStats)> {
    let f: &dyn Fn(f64) -> f64 = &log_density;
    let envelope = Envelope::build(f, mode_hint)?;
    let mut attempts = 0u64;
    while attempts < MAX_ATTEMPTS {
        attempts += 1;
        let y = envelope.propose(rng);
        let env = envelope.log_value(y);
        let val = f(y);
        if val > env + 1e-7 * (1.0 + env.abs()) {
            return Err(Error::NotLogConcave(format!(
                "density exceeds its secant envelope at {y} ({val} > {env})"
            )));
        }
        if rng.uniform().ln() <= val - env {
            return Ok((
                y,
                LogConcaveStats {
                    mode: envelope.mode,
                    attempts,
                },
            ));
        }
    }
    Err(Error::OracleFailure {
        attempts: MAX_ATTEMPTS,
    })
}

struct Envelope {
    mode: f64,
    peak: f64,
    /// left tail: line through (q_lo, v_lo) with slope s_lo > 0 on (-inf, q_lo]
    q_lo: f64,
    v_lo: f64,
    s_lo: f64,
    /// right tail: line through (q_hi, v_hi) with slope s_hi < 0 on [q_hi, inf)
    q_hi: f64,
    v_hi: f64,
    s_hi: f64,
    /// piece probabilities (left tail, cap, right tail)
    cum1: f64,
    cum2: f64,
}

impl Envelope {
    fn build(f: &dyn Fn(f64) -> f64, hint: f64) -> Result<Self> {
        let mode = locate_mode(f, hint)?;
        let peak = f(mode);
        if !peak.is_finite() {
            return Err(Error::NotLogConcave(format!(
                "log density is {peak} at its located mode {mode}"
            )));
        }

        let (p_lo, q_lo) = drop_points(f, mode, peak, -1.0)?;
        let (p_hi, q_hi) = drop_points(f, mode, peak, 1.0)?;
        let (v_plo, v_qlo) = (f(p_lo), f(q_lo));
        let (v_phi, v_qhi) = (f(p_hi), f(q_hi));
        let s_lo = (v_plo - v_qlo) / (p_lo - q_lo);
        let s_hi = (v_qhi - v_phi) / (q_hi - p_hi);
        if !(s_lo > 0.0) || !(s_hi < 0.0) {
            return Err(Error::NotLogConcave(
                "tail secants do not slope toward the mode".into(),
            ));
        }

        // piece masses relative to exp(peak)
        let m_left = (v_qlo - peak).exp() / s_lo;
        let m_cap = q_hi - q_lo;
        let m_right = (v_qhi - peak).exp() / (-s_hi);
        let total = m_left + m_cap + m_right;
        Ok(Self {
            mode,
            peak,
            q_lo,
            v_lo: v_qlo,
            s_lo,
            q_hi,
            v_hi: v_qhi,
            s_hi,
            cum1: m_left / total,
            cum2: (m_left + m_cap) / total,
        })
    }

    fn propose(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        if u < self.cum1 {
            self.q_lo - rng.exponential() / self.s_lo
        } else if u < self.cum2 {
            self.q_lo + (self.q_hi - self.q_lo) * rng.uniform()
        } else {
            self.q_hi + rng.exponential() / (-self.s_hi)
        }
    }

    fn log_value(&self, y: f64) -> f64 {
        if y < self.q_lo {
            self.v_lo + self.s_lo * (y - self.q_lo)
        } else if y > self.q_hi {
            self.v_hi + self.s_hi * (y - self.q_hi)
        } else {
            self.peak
        }
    }
}

/// Bracket the mode by doubling steps from the hint, then shrink by ternary
/// search.
fn locate_mode(f: &dyn Fn(f64) -> f64, hint: f64) -> Result<f64> {
    let mut center = hint;
    let mut fc = f(center);
    let step = hint.abs().max(1.0) * 0.125;

    if fc == f64::NEG_INFINITY {
        // walk out of the zero-density region first
        for k in 0..200 {
            let s = step * (1 << (k / 2).min(50)) as f64;
            let cand = if k % 2 == 0 { center + s } else { center - s };
            let v = f(cand);
            if v > f64::NEG_INFINITY {
                center = cand;
                fc = v;
                break;
            }
        }
        if fc == f64::NEG_INFINITY {
            return Err(Error::NotLogConcave(
                "could not find a point of positive density near the hint".into(),
            ));
        }
    }

    let (mut lo, mut hi);
    loop {
        let fl = f(center - step);
        let fr = f(center + step);
        if fl <= fc && fr <= fc {
            lo = center - step;
            hi = center + step;
            break;
        }
        // walk uphill, doubling
        let dir = if fr > fl { 1.0 } else { -1.0 };
        let mut prev = center;
        let mut fprev = fc;
        let mut t = step;
        loop {
            let cand = prev + dir * t;
            let v = f(cand);
            if v <= fprev {
                lo = prev - dir * t;
                hi = cand;
                if lo > hi {
                    std::mem::swap(&mut lo, &mut hi);
                }
                center = prev;
                break;
            }
            prev = cand;
            fprev = v;
            t *= 2.0;
            if t > 1e12 {
                return Err(Error::NotLogConcave(
                    "log density keeps increasing; mode search diverged".into(),
                ));
            }
        }
        break;
    }

    for _ in 0..200 {
        if hi - lo <= 1e-9 * center.abs().max(1.0) {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
        center = 0.5 * (lo + hi);
    }
    Ok(0.5 * (lo + hi))
}

/// Find `p` with a log drop of about one unit from the peak in the given
/// direction, returning `(p, q = mode + 2 (p - mode))` with `q` pulled back
/// toward `p` while the density there is zero.
fn drop_points(f: &dyn Fn(f64) -> f64, mode: f64, peak: f64, dir: f64) -> Result<(f64, f64)> {
    let scale = mode.abs().max(1.0);
    let mut t = 0.5 * scale;
    let mut drop = peak - f(mode + dir * t);
    for _ in 0..200 {
        if (0.5..=2.5).contains(&drop) {
            break;
        }
        if drop > 2.5 || drop.is_nan() {
            t *= 0.5;
        } else {
            t *= 2.0;
        }
        if t < 1e-300 || t > 1e300 {
            return Err(Error::NotLogConcave(
                "could not measure a finite width around the mode".into(),
            ));
        }
        drop = peak - f(mode + dir * t);
    }
    if !(0.0..=60.0).contains(&drop) {
        return Err(Error::NotLogConcave(
            "log density does not decay away from the mode".into(),
        ));
    }
    let p = mode + dir * t;
    let mut q = mode + 2.0 * dir * t;
    // pull q inside the support if the density vanishes there
    for _ in 0..200 {
        if f(q).is_finite() {
            break;
        }
        q = 0.5 * (q + p);
    }
    if !f(q).is_finite() || (q - p) * dir <= 0.0 {
        return Err(Error::NotLogConcave(
            "support boundary too close to the mode for a tail secant".into(),
        ));
    }
    Ok((p, q))
}
