//! Small vector helpers and the log-space special functions used by the
//! oracles and the quadrature code.

use libm::erfc;
use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837877066409345483560659472811;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`, elementwise.
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// log(exp(a) + exp(b)) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log(exp(a) - exp(b)) for a >= b; -inf when the difference underflows.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b);
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = -(b - a).exp_m1(); // 1 - exp(b - a), computed stably
    if d <= 0.0 {
        f64::NEG_INFINITY
    } else {
        a + d.ln()
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || !hi.is_finite() {
        return hi;
    }
    let sum: f64 = values.iter().map(|v| (v - hi).exp()).sum();
    hi + sum.ln()
}

/// Standard normal CDF. Routed through erfc so the deep lower tail keeps
/// full relative accuracy instead of cancelling against 1.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// log of the standard normal CDF.
///
/// erfc stays in the normal f64 range down to x ~ -36; past that we switch
/// to the continued asymptotic expansion of the Mills ratio. The upper tail
/// goes through log1p of the mirrored tail mass so it stays exact as the
/// CDF approaches one.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        return (-normal_cdf(-x)).ln_1p();
    }
    if x >= -36.0 {
        let e = erfc(-x / std::f64::consts::SQRT_2);
        if e > 0.0 {
            return (0.5 * e).ln();
        }
    }
    // log phi(x) - log(-x) + log(1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8)
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
        + 105.0 / (x2 * x2 * x2 * x2);
    -0.5 * x2 - 0.5 * LN_2PI - (-x).ln() + series.ln()
}

/// log surface measure of the unit sphere S^k embedded in R^{k+1}.
pub fn log_sphere_surface(k: usize) -> f64 {
    let kp1 = (k + 1) as f64;
    std::f64::consts::LN_2 + 0.5 * kp1 * std::f64::consts::PI.ln() - ln_gamma(0.5 * kp1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_matches_direct() {
        assert!((log_add_exp(0.0, 0.0) - 2.0f64.ln()).abs() < 1e-15);
        assert!((log_add_exp(-1000.0, 0.0) - 0.0).abs() < 1e-15);
        let v = log_add_exp(700.0, 700.0);
        assert!((v - (700.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_sub_exp_small_and_large_gaps() {
        // ln(e^0 - e^-1)
        let want = (1.0f64 - (-1.0f64).exp()).ln();
        assert!((log_sub_exp(0.0, -1.0) - want).abs() < 1e-15);
        // tiny gap: ln(e^0 - e^{-1e-12}) = ln(1 - e^{-1e-12}) ~ ln(1e-12)
        let got = log_sub_exp(0.0, -1e-12);
        let want = (1e-12f64).ln();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        assert_eq!(log_sub_exp(3.0, 3.0), f64::NEG_INFINITY);
        assert_eq!(log_sub_exp(3.0, f64::NEG_INFINITY), 3.0);
    }

    #[test]
    fn log_sum_exp_handles_empty_tail() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[0.0, (2.0f64).ln(), f64::NEG_INFINITY]);
        assert!((v - 3.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_normal_cdf_reference_values() {
        // reference values computed with 30-digit arithmetic
        let cases: [(f64, f64); 9] = [
            (-1.0, -1.8410216450092635),
            (-5.0, -15.064998393988726),
            (-10.0, -53.23128515051247),
            (-20.0, -203.91715537109726),
            (-36.0, -652.5032275937984),
            (-40.0, -804.6084420137538),
            (-100.0, -5005.524208694205),
            (0.5, -0.3689464152886564),
            (6.0, -9.865876455243757e-10),
        ];
        for (x, want) in cases {
            let got = log_normal_cdf(x);
            let tol = 1e-11 * want.abs().max(1e-9);
            assert!(
                (got - want).abs() <= tol,
                "log_normal_cdf({x}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn sphere_surface_small_cases() {
        // S^0 = {-1, 1}, S^1 = circle, S^2 = usual sphere
        assert!((log_sphere_surface(0) - 2.0f64.ln()).abs() < 1e-14);
        assert!((log_sphere_surface(1) - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
        assert!((log_sphere_surface(2) - (4.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }
}
