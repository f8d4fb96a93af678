//! Monotone cubic (Fritsch-Carlson) interpolation of tabulated densities and
//! the CDF machinery built on top of it.
//!
//! A [`CdfTable`] holds a density sampled on a grid, interpolates it with a
//! shape-preserving cubic so the interpolant never overshoots the data (and
//! in particular stays nonnegative), and integrates the cubic exactly per
//! cell. That yields a strictly monotone piecewise-quartic CDF that can be
//! evaluated and inverted to floating point accuracy.

use crate::error::{Error, Result};

/// Fritsch-Carlson slopes for data `(x, y)`; the resulting Hermite cubic is
/// monotone on every monotone data segment and bounded by the local data.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        d[0] = s;
        d[1] = s;
        return d;
    }
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }

    d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        s = 0.0;
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        s = 3.0 * d0;
    }
    s
}

/// Integral of the Hermite basis over [0, s].
fn hermite_cumulative(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    (
        0.5 * s4 - s3 + s,
        0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2,
        -0.5 * s4 + s3,
        0.25 * s4 - s3 / 3.0,
    )
}

/// Normalized CDF of a density tabulated on a grid.
#[derive(Debug, Clone)]
pub struct CdfTable {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl CdfTable {
    /// Build from log-density values at strictly increasing nodes. The
    /// common scale cancels, so the values may be unnormalized.
    pub fn from_log_density(x: Vec<f64>, log_density: &[f64]) -> Result<Self> {
        if x.len() != log_density.len() || x.len() < 2 {
            return Err(Error::InvalidParameter(
                "cdf table needs at least two matching nodes".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "cdf table nodes must be strictly increasing".into(),
            ));
        }
        let peak = log_density
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::DegenerateSeries(
                "density is zero or non-finite everywhere on the grid".into(),
            ));
        }
        let y: Vec<f64> = log_density.iter().map(|&l| (l - peak).exp()).collect();
        let slope = pchip_slopes(&x, &y);

        let n = x.len();
        let mut cum = vec![0.0; n];
        for i in 0..n - 1 {
            let h = x[i + 1] - x[i];
            let mass = h * (0.5 * (y[i] + y[i + 1]) + h * (slope[i] - slope[i + 1]) / 12.0);
            cum[i + 1] = cum[i] + mass.max(0.0);
        }
        let total = cum[n - 1];
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateSeries(
                "density integrates to zero on the grid".into(),
            ));
        }
        Ok(Self {
            x,
            y,
            slope,
            cum,
            total,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn cell_of(&self, q: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&q).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    /// Density (normalized) at `q`, zero outside the grid.
    pub fn density(&self, q: f64) -> f64 {
        if q < self.x[0] || q > *self.x.last().unwrap() {
            return 0.0;
        }
        let i = self.cell_of(q);
        let h = self.x[i + 1] - self.x[i];
        let s = (q - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let v = self.y[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + h * self.slope[i] * (s3 - 2.0 * s2 + s)
            + self.y[i + 1] * (-2.0 * s3 + 3.0 * s2)
            + h * self.slope[i + 1] * (s3 - s2);
        v.max(0.0) / self.total
    }

    /// CDF value at `q`.
    pub fn cdf(&self, q: f64) -> f64 {
        if q <= self.x[0] {
            return 0.0;
        }
        if q >= *self.x.last().unwrap() {
            return 1.0;
        }
        let i = self.cell_of(q);
        let h = self.x[i + 1] - self.x[i];
        let s = (q - self.x[i]) / h;
        let (h00, h10, h01, h11) = hermite_cumulative(s);
        let part = h
            * (self.y[i] * h00
                + h * self.slope[i] * h10
                + self.y[i + 1] * h01
                + h * self.slope[i + 1] * h11);
        ((self.cum[i] + part.max(0.0)) / self.total).clamp(0.0, 1.0)
    }

    /// Inverse CDF by bisection refined with Newton steps inside one cell.
    pub fn inverse(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let t = u * self.total;
        // find the cell with cum[i] <= t <= cum[i+1]
        let mut i = match self
            .cum
            .binary_search_by(|v| v.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        i = i.min(self.x.len() - 2);
        let h = self.x[i + 1] - self.x[i];
        let want = t - self.cum[i];
        let cell_mass = self.cum[i + 1] - self.cum[i];
        if cell_mass <= 0.0 {
            return self.x[i];
        }

        let part_at = |s: f64| -> f64 {
            let (h00, h10, h01, h11) = hermite_cumulative(s);
            h * (self.y[i] * h00
                + h * self.slope[i] * h10
                + self.y[i + 1] * h01
                + h * self.slope[i + 1] * h11)
        };
        let dens_at = |s: f64| -> f64 {
            let (s2, s3) = (s * s, s * s * s);
            (self.y[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
                + h * self.slope[i] * (s3 - 2.0 * s2 + s)
                + self.y[i + 1] * (-2.0 * s3 + 3.0 * s2)
                + h * self.slope[i + 1] * (s3 - s2))
                .max(0.0)
        };

        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut s = (want / cell_mass).clamp(0.0, 1.0);
        for _ in 0..64 {
            let val = part_at(s) - want;
            if val.abs() <= 1e-15 * self.total {
                break;
            }
            if val > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = dens_at(s) * h;
            let newton = if d > 0.0 { s - val / d } else { f64::NAN };
            s = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        self.x[i] + s * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_table(n: usize) -> CdfTable {
        let x: Vec<f64> = (0..n).map(|i| -8.0 + 16.0 * i as f64 / (n - 1) as f64).collect();
        let logs: Vec<f64> = x.iter().map(|&v| -0.5 * v * v).collect();
        CdfTable::from_log_density(x, &logs).unwrap()
    }

    #[test]
    fn gaussian_cdf_matches_erf() {
        let table = gaussian_table(801);
        for &q in &[-3.0, -1.0, -0.3, 0.0, 0.7, 2.5] {
            let want = crate::math::normal_cdf(q);
            let got = table.cdf(q);
            assert!((got - want).abs() < 1e-8, "cdf({q}): {got} vs {want}");
        }
    }

    #[test]
    fn inverse_is_right_inverse_of_cdf() {
        let table = gaussian_table(801);
        for k in 1..40 {
            let u = k as f64 / 40.0;
            let q = table.inverse(u);
            assert!((table.cdf(q) - u).abs() < 1e-10, "u = {u}");
        }
    }

    #[test]
    fn kinked_density_stays_nonnegative() {
        // Laplace density has a kink at 0; the interpolant must not dip
        // below zero anywhere.
        let x: Vec<f64> = (0..401).map(|i| -6.0 + 12.0 * i as f64 / 400.0).collect();
        let logs: Vec<f64> = x.iter().map(|&v| -v.abs()).collect();
        let table = CdfTable::from_log_density(x, &logs).unwrap();
        for i in 0..2000 {
            let q = -6.0 + 12.0 * i as f64 / 2000.0;
            assert!(table.density(q) >= 0.0);
        }
        assert!((table.cdf(0.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_input() {
        let x = vec![0.0, 1.0, 2.0];
        assert!(CdfTable::from_log_density(x.clone(), &[f64::NEG_INFINITY; 3]).is_err());
        assert!(CdfTable::from_log_density(vec![0.0, 0.0, 1.0], &[0.0; 3]).is_err());
    }
}
