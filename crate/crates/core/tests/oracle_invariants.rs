//! Distributional invariants of the proximal sampling oracles.

use proxmh::math::LN_2PI;
use proxmh::oracle::{
    group_lasso_oracle_sample, oracle_for_spec, GroupLassoOracle, ProxOracle, ScaledL1Oracle,
    SeparableOracle, ZeroOracle,
};
use proxmh::quad::{quadrature_1d, IntegrationWindow, Quadrature1DConfig};
use proxmh::rng::RngStream;
use proxmh::target::{Coordinate1d, RegularizerSpec};

fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Partition consistency: oracle log partitions against independent
/// references on 20 random (u, eta) pairs.
#[test]
fn partition_consistency_random_configs() {
    let mut rng = RngStream::root(1001);

    // zero oracle against the analytic Gaussian normalizer
    let zero = ZeroOracle::new(2);
    for _ in 0..20 {
        let u = [rng.standard_normal(), rng.standard_normal()];
        let eta = 0.05 + rng.uniform();
        let got = zero.log_partition(&u, eta).unwrap();
        let want = LN_2PI + (2.0 * eta).ln();
        assert!((got - want).abs() < 1e-12);
    }

    // l1 oracle against adaptive quadrature
    let lambda = 0.9;
    let l1 = ScaledL1Oracle::new(1, lambda).unwrap();
    for _ in 0..20 {
        let u = [3.0 * rng.standard_normal()];
        let eta = 0.02 + 0.5 * rng.uniform();
        let got = l1.log_partition(&u, eta).unwrap();
        let cfg = Quadrature1DConfig {
            rel_tol: 1e-12,
            window: IntegrationWindow::AutoExpand {
                center: u[0],
                initial_half_width: 1.0,
            },
            breakpoints: vec![0.0],
            ..Default::default()
        };
        let want = quadrature_1d(
            |y| -(y - u[0]) * (y - u[0]) / (4.0 * eta) - lambda * y.abs(),
            &cfg,
        )
        .unwrap()
        .log_integral;
        assert!(
            (got - want).abs() <= 1e-8 * want.abs().max(1e-2),
            "u = {}, eta = {eta}: {got} vs {want}",
            u[0]
        );
    }

    // generic separable oracle against a dense trapezoid reference
    let component = Coordinate1d::new(|y: f64| (1.0 + y * y).sqrt() - 1.0, 1.0);
    let separable = SeparableOracle::new(vec![component]);
    for _ in 0..20 {
        let u = [2.0 * rng.standard_normal()];
        let eta = 0.05 + 0.4 * rng.uniform();
        let got = separable.log_partition(&u, eta).unwrap();
        let n = 2_000_000usize;
        let (lo, hi) = (u[0] - 14.0, u[0] + 14.0);
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0f64;
        for i in 0..=n {
            let y = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w
                * (-(y - u[0]) * (y - u[0]) / (4.0 * eta) - ((1.0 + y * y).sqrt() - 1.0)).exp();
        }
        let want = (acc * h).ln();
        assert!(
            (got - want).abs() <= 1e-8 * want.abs().max(1e-2),
            "u = {}, eta = {eta}: {got} vs {want}",
            u[0]
        );
    }

    // group oracle (2D group) against a dense Simpson tensor grid
    let group = GroupLassoOracle::new(2, vec![vec![0, 1]], vec![1.0], 256).unwrap();
    for trial in 0..3 {
        let u = [
            1.5 * rng.standard_normal(),
            1.5 * rng.standard_normal(),
        ];
        let eta = 0.1 + 0.2 * rng.uniform();
        let got = group.log_partition(&u, eta).unwrap();

        let n = 1201usize;
        let half = 12.0 * (2.0 * eta).sqrt() + 2.0 * eta;
        let h = 2.0 * half / (n - 1) as f64;
        let sw = |i: usize| -> f64 {
            if i == 0 || i == n - 1 {
                1.0 / 3.0
            } else if i % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            }
        };
        let mut acc = 0.0f64;
        for i in 0..n {
            let x = u[0] - half + i as f64 * h;
            for j in 0..n {
                let y = u[1] - half + j as f64 * h;
                let d2 = (x - u[0]) * (x - u[0]) + (y - u[1]) * (y - u[1]);
                acc += sw(i) * sw(j) * (-d2 / (4.0 * eta) - (x * x + y * y).sqrt()).exp();
            }
        }
        let want = (acc * h * h).ln();
        assert!(
            (got - want).abs() <= 1e-6 * want.abs().max(1e-2),
            "trial {trial}: {got} vs {want}"
        );
    }
}

/// Shift covariance. For the Gaussian oracle translation equivariance holds
/// exactly (stream for stream); for the l1 oracle the law of
/// `sample(u + c) - c` under the shifted penalty `|y - c|` matches the
/// original law.
#[test]
fn shift_covariance() {
    let zero = ZeroOracle::new(3);
    let c = [0.7, -1.3, 0.2];
    let u = [0.1, 0.4, -0.9];
    let uc: Vec<f64> = u.iter().zip(&c).map(|(a, b)| a + b).collect();
    let mut r1 = RngStream::root(1002);
    let mut r2 = RngStream::root(1002);
    for _ in 0..200 {
        let a = zero.sample(&u, 0.3, &mut r1).unwrap();
        let b = zero.sample(&uc, 0.3, &mut r2).unwrap();
        for k in 0..3 {
            assert_eq!((b[k] - c[k]).to_bits(), a[k].to_bits());
        }
    }

    // l1 against the shifted-kink separable oracle
    let (lambda, eta, shift) = (1.0, 0.25, 0.8);
    let l1 = ScaledL1Oracle::new(1, lambda).unwrap();
    let shifted = SeparableOracle::new(vec![Coordinate1d::new(
        move |y: f64| lambda * (y - shift).abs(),
        lambda,
    )
    .with_kinks(vec![shift])]);
    let n = 20_000;
    let mut rng = RngStream::root(1003);
    let mut base: Vec<f64> = (0..n)
        .map(|_| l1.sample(&[0.4], eta, &mut rng).unwrap()[0])
        .collect();
    let mut moved: Vec<f64> = (0..n)
        .map(|_| shifted.sample(&[0.4 + shift], eta, &mut rng).unwrap()[0] - shift)
        .collect();
    let ks = two_sample_ks(&mut base, &mut moved);
    // two-sample KS 1% critical value ~ 1.63 sqrt(2/n)
    assert!(ks <= 1.63 * (2.0 / n as f64).sqrt() * 1.5, "KS {ks}");

    // and the partition shifts not at all
    let z1 = l1.log_partition(&[0.4], eta).unwrap();
    let z2 = shifted.log_partition(&[0.4 + shift], eta).unwrap();
    assert!((z1 - z2).abs() < 1e-8);
}

/// Adding a constant to g multiplies Z by exp(-c) and leaves the sampling
/// law unchanged.
#[test]
fn constant_shift_identity() {
    let (lambda, eta, c) = (0.8, 0.3, 1.7);
    let plain = ScaledL1Oracle::new(1, lambda).unwrap();
    let lifted = SeparableOracle::new(vec![Coordinate1d::new(
        move |y: f64| lambda * y.abs() + c,
        lambda,
    )
    .with_kinks(vec![0.0])]);

    for &u in &[-2.0, 0.0, 0.9] {
        let z_plain = plain.log_partition(&[u], eta).unwrap();
        let z_lifted = lifted.log_partition(&[u], eta).unwrap();
        assert!(
            ((z_plain - c) - z_lifted).abs() < 1e-8,
            "u = {u}: {z_plain} vs {z_lifted}"
        );
    }

    let n = 20_000;
    let mut rng = RngStream::root(1004);
    let mut a: Vec<f64> = (0..n)
        .map(|_| plain.sample(&[0.9], eta, &mut rng).unwrap()[0])
        .collect();
    let mut b: Vec<f64> = (0..n)
        .map(|_| lifted.sample(&[0.9], eta, &mut rng).unwrap()[0])
        .collect();
    let ks = two_sample_ks(&mut a, &mut b);
    assert!(ks <= 1.63 * (2.0 / n as f64).sqrt() * 1.5, "KS {ks}");
}

/// The 3D group oracle marginal along the center direction matches the
/// quadrature marginal of the reduced 2D density.
#[test]
fn group_marginal_matches_quadrature() {
    let (eta, w) = (0.1, 1.0);
    let center = [2.0, 0.0, 0.0];
    let rho = 2.0;

    // marginal density of t: integrate the reduced density over r
    let r_hi = (2.0 * eta_f(eta)).sqrt() * ((3.0f64).sqrt() + 12.0);
    let inner_cfg = Quadrature1DConfig {
        rel_tol: 1e-10,
        window: IntegrationWindow::Explicit { lo: 0.0, hi: r_hi },
        ..Default::default()
    };
    let marginal = |t: f64| {
        quadrature_1d(
            |r: f64| {
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    r.ln() - ((t - rho) * (t - rho) + r * r) / (4.0 * eta)
                        - w * (t * t + r * r).sqrt()
                }
            },
            &inner_cfg,
        )
        .map(|r| r.log_integral)
        .unwrap_or(f64::NEG_INFINITY)
    };
    let half = 12.0 * (2.0 * eta).sqrt() + 2.0 * eta * w;
    let n_nodes = 2048;
    let nodes: Vec<f64> = (0..=n_nodes)
        .map(|i| rho - half + 2.0 * half * i as f64 / n_nodes as f64)
        .collect();
    let logs: Vec<f64> = nodes.iter().map(|&t| marginal(t)).collect();
    let table = proxmh::pchip::CdfTable::from_log_density(nodes, &logs).unwrap();

    let n = 100_000;
    let mut rng = RngStream::root(1005);
    let mut ts: Vec<f64> = (0..n)
        .map(|_| {
            let y = group_lasso_oracle_sample(&center, eta, w, &mut rng).unwrap();
            // component along the center direction
            y[0]
        })
        .collect();
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let nf = n as f64;
    let ks = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = table.cdf(t);
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks <= 0.02, "marginal KS {ks}");
}

fn eta_f(eta: f64) -> f64 {
    eta
}

/// The oracle factory wires the right implementation per regularizer and
/// rejects mismatched custom oracles.
#[test]
fn factory_dispatch() {
    let spec = RegularizerSpec::ScaledL1 { lambda: 1.0 };
    let oracle = oracle_for_spec(&spec, 4).unwrap();
    assert_eq!(oracle.dim(), 4);

    let custom = RegularizerSpec::Custom(proxmh::target::CustomRegularizer {
        g: std::sync::Arc::new(|_: &[f64]| 0.0),
        subgrad: None,
        prox: None,
        oracle: std::sync::Arc::new(ZeroOracle::new(2)),
    });
    assert!(oracle_for_spec(&custom, 3).is_err());
    assert!(oracle_for_spec(&custom, 2).is_ok());
}
