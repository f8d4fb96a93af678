//! Property tests for the algebraic invariants.

use proptest::prelude::*;
use proxmh::math::{log_add_exp, log_sub_exp};
use proxmh::oracle::laplace_log_partition_1d;
use proxmh::prox::{prox_map, soft_threshold};
use proxmh::target::RegularizerSpec;

proptest! {
    /// Soft thresholding is firmly non-expansive.
    #[test]
    fn soft_threshold_is_non_expansive(
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
        t in 0.0f64..10.0,
    ) {
        let d = (soft_threshold(x, t) - soft_threshold(y, t)).abs();
        prop_assert!(d <= (x - y).abs() + 1e-12);
    }

    /// The prox of the group norm never increases the norm and keeps the
    /// direction.
    #[test]
    fn group_prox_shrinks_toward_origin(
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        eta in 0.01f64..5.0,
        w in 0.1f64..3.0,
    ) {
        let spec = RegularizerSpec::GroupLasso { groups: vec![vec![0, 1]], weights: vec![w] };
        let p = prox_map(&spec, &[a, b], eta).unwrap();
        let before = (a * a + b * b).sqrt();
        let after = (p[0] * p[0] + p[1] * p[1]).sqrt();
        prop_assert!(after <= before + 1e-12);
        // collinear with the input
        prop_assert!((p[0] * b - p[1] * a).abs() <= 1e-9 * before.max(1.0));
    }

    /// log-space add/sub round trip.
    #[test]
    fn log_add_sub_round_trip(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let hi = a.max(b);
        let lo = a.min(b);
        let sum = log_add_exp(hi, lo);
        let back = log_sub_exp(sum, lo);
        prop_assert!((back - hi).abs() <= 1e-9 * hi.abs().max(1.0));
    }

    /// Scaling identity of the l1 partition function: substituting y = s w
    /// gives log Z_{eta, lambda}(u) = log s + log Z_{eta/s^2, lambda s}(u/s).
    #[test]
    fn l1_partition_scaling_identity(
        u in -5.0f64..5.0,
        eta in 0.02f64..1.0,
        lambda in 0.05f64..3.0,
        s in 0.5f64..2.0,
    ) {
        let lhs = laplace_log_partition_1d(u, eta, lambda);
        let rhs = s.ln() + laplace_log_partition_1d(u / s, eta / (s * s), lambda * s);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
            "lhs {lhs}, rhs {rhs}");
    }

    /// Monotonicity: the l1 partition decreases in lambda (heavier penalty)
    /// and is symmetric in u.
    #[test]
    fn l1_partition_shape(
        u in -5.0f64..5.0,
        eta in 0.02f64..1.0,
        lambda in 0.05f64..3.0,
    ) {
        let z = laplace_log_partition_1d(u, eta, lambda);
        let z_heavier = laplace_log_partition_1d(u, eta, lambda * 1.5);
        prop_assert!(z_heavier < z);
        let z_mirror = laplace_log_partition_1d(-u, eta, lambda);
        prop_assert!((z - z_mirror).abs() <= 1e-12 * z.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Truncated normal draws respect their support for arbitrary bounds.
    #[test]
    fn truncated_normal_respects_support(
        mean in -5.0f64..5.0,
        var in 0.01f64..4.0,
        a in -8.0f64..7.0,
        width in 0.1f64..6.0,
        seed in 0u64..1000,
    ) {
        let params = proxmh::truncnorm::TruncatedNormalParams::new(
            mean, var, a, a + width).unwrap();
        let mut rng = proxmh::rng::RngStream::root(seed);
        for _ in 0..50 {
            let s = proxmh::truncnorm::sample_truncated_normal(&params, &mut rng);
            prop_assert!(s >= a && s <= a + width, "sample {s} outside [{a}, {}]", a + width);
        }
    }

    /// Quadrature is invariant under translating the integrand.
    #[test]
    fn quadrature_translation_invariance(shift in -20.0f64..20.0) {
        use proxmh::quad::{quadrature_1d, IntegrationWindow, Quadrature1DConfig};
        let base = Quadrature1DConfig {
            rel_tol: 1e-11,
            window: IntegrationWindow::AutoExpand { center: 0.0, initial_half_width: 1.0 },
            ..Default::default()
        };
        let moved = Quadrature1DConfig {
            rel_tol: 1e-11,
            window: IntegrationWindow::AutoExpand { center: shift, initial_half_width: 1.0 },
            breakpoints: vec![shift],
            ..Default::default()
        };
        let a = quadrature_1d(|y| -y * y - y.abs(), &base).unwrap().log_integral;
        let b = quadrature_1d(
            move |y| {
                let z = y - shift;
                -z * z - z.abs()
            },
            &moved,
        )
        .unwrap()
        .log_integral;
        prop_assert!((a - b).abs() <= 1e-9);
    }
}
