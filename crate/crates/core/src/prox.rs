//! Moreau proximity operator `argmin_y { ||y - x||^2 / (2 eta) + g(y) }`.

use crate::error::{Error, Result};
use crate::target::{Coordinate1d, RegularizerSpec};

/// Proximity point of the structured regularizer.
///
/// Soft thresholding for the scaled l1 penalty, blockwise shrinkage for the
/// group penalty, a ternary search on the strongly convex 1D objective for
/// generic separable components.
pub fn prox_map(g_spec: &RegularizerSpec, x: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prox step must be positive, got {eta}"
        )));
    }
    match g_spec {
        RegularizerSpec::Zero => Ok(x.to_vec()),
        RegularizerSpec::ScaledL1 { lambda } => Ok(x
            .iter()
            .map(|&v| soft_threshold(v, eta * lambda))
            .collect()),
        RegularizerSpec::SeparableGeneric { components } => {
            if components.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: components.len(),
                    got: x.len(),
                });
            }
            Ok(components
                .iter()
                .zip(x)
                .map(|(c, &v)| prox_1d(c, v, eta))
                .collect())
        }
        RegularizerSpec::GroupLasso { groups, weights } => {
            let mut out = x.to_vec();
            for (group, w) in groups.iter().zip(weights) {
                let norm = group.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                let shrink = if norm <= eta * w {
                    0.0
                } else {
                    1.0 - eta * w / norm
                };
                for &i in group {
                    out[i] = shrink * x[i];
                }
            }
            Ok(out)
        }
        RegularizerSpec::Custom(custom) => match &custom.prox {
            Some(prox) => Ok(prox(x, eta)),
            None => Err(Error::Unsupported(
                "custom regularizer has no proximity oracle".into(),
            )),
        },
    }
}

pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// 1D prox by ternary search. The minimizer moves at most `eta * lipschitz`
/// away from `x`, which bounds the search bracket.
pub fn prox_1d(component: &Coordinate1d, x: f64, eta: f64) -> f64 {
    let reach = eta * component.lipschitz;
    if reach == 0.0 {
        return x;
    }
    let objective = |y: f64| (y - x) * (y - x) / (2.0 * eta) + (component.g)(y);
    let mut lo = x - reach;
    let mut hi = x + reach;
    for _ in 0..200 {
        if hi - lo <= 1e-14 * x.abs().max(1.0) {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1) <= objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::Coordinate1d;

    #[test]
    fn l1_soft_threshold_examples() {
        let spec = RegularizerSpec::ScaledL1 { lambda: 1.0 };
        assert_eq!(prox_map(&spec, &[3.0], 1.0).unwrap(), vec![2.0]);
        assert_eq!(prox_map(&spec, &[0.5], 1.0).unwrap(), vec![0.0]);
        assert_eq!(prox_map(&spec, &[-2.5], 1.0).unwrap(), vec![-1.5]);
    }

    #[test]
    fn group_shrinkage_example() {
        let spec = RegularizerSpec::GroupLasso {
            groups: vec![vec![0, 1]],
            weights: vec![1.0],
        };
        let p = prox_map(&spec, &[3.0, 4.0], 1.0).unwrap();
        assert!((p[0] - 2.4).abs() < 1e-14);
        assert!((p[1] - 3.2).abs() < 1e-14);

        // inside the threshold the whole group collapses to zero
        let p = prox_map(&spec, &[0.3, 0.4], 1.0).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn separable_prox_matches_soft_threshold() {
        // |.| expressed as a generic component must reproduce soft
        // thresholding up to the search tolerance
        let comp = Coordinate1d::new(|y: f64| 2.0 * y.abs(), 2.0);
        let spec = RegularizerSpec::SeparableGeneric {
            components: vec![comp],
        };
        for &(x, eta) in &[(3.0, 0.5), (-0.4, 0.7), (0.9, 0.3), (10.0, 1.0)] {
            let got = prox_map(&spec, &[x], eta).unwrap()[0];
            let want = soft_threshold(x, 2.0 * eta);
            assert!((got - want).abs() < 1e-9, "x={x}, eta={eta}: {got} vs {want}");
        }
    }

    #[test]
    fn custom_without_prox_is_unsupported() {
        use crate::oracle::ZeroOracle;
        use std::sync::Arc;
        let spec = RegularizerSpec::Custom(crate::target::CustomRegularizer {
            g: Arc::new(|_: &[f64]| 0.0),
            subgrad: None,
            prox: None,
            oracle: Arc::new(ZeroOracle::new(1)),
        });
        assert!(matches!(
            prox_map(&spec, &[1.0], 0.5),
            Err(crate::error::Error::Unsupported(_))
        ));
    }
}
