//! Bundled target families used by the CLI and the test suite.

use crate::error::{Error, Result};
use crate::target::{CompositeTarget, CompositeTargetBuilder, Coordinate1d, RegularizerSpec};

/// Isotropic Gaussian: f(x) = ||x||^2 / 2, g = 0.
pub fn standard_gaussian(dim: usize) -> Result<CompositeTarget> {
    CompositeTargetBuilder::new(
        dim,
        |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        |x: &[f64]| x.to_vec(),
    )
    .smoothness(1.0)
    .dissipativity(1.0, 0.0, vec![0.0; dim])
    .build()
}

/// f(x) = ||x - mean||^2 / 2, g(x) = lambda ||x||_1.
pub fn gaussian_l1(dim: usize, lambda: f64, mean: &[f64]) -> Result<CompositeTarget> {
    if mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mean.len(),
        });
    }
    let m = mean.to_vec();
    let m2 = mean.to_vec();
    CompositeTargetBuilder::new(
        dim,
        move |x: &[f64]| {
            0.5 * x
                .iter()
                .zip(&m)
                .map(|(v, c)| (v - c) * (v - c))
                .sum::<f64>()
        },
        move |x: &[f64]| x.iter().zip(&m2).map(|(v, c)| v - c).collect(),
    )
    .smoothness(1.0)
    .dissipativity(1.0, 0.0, mean.to_vec())
    .regularizer(RegularizerSpec::ScaledL1 { lambda })
    .build()
}

/// f(x) = ||x||^2 / 2 with a group penalty `sum_j w_j ||x_{G_j}||`.
pub fn group_lasso_target(
    dim: usize,
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
) -> Result<CompositeTarget> {
    CompositeTargetBuilder::new(
        dim,
        |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        |x: &[f64]| x.to_vec(),
    )
    .smoothness(1.0)
    .dissipativity(1.0, 0.0, vec![0.0; dim])
    .regularizer(RegularizerSpec::GroupLasso { groups, weights })
    .build()
}

/// f(x) = ||x||^2 / 2 with smooth 1-Lipschitz pseudo-Huber components
/// `g_i(t) = scale * (sqrt(1 + t^2) - 1)`, exercising the generic separable
/// oracle on a regularizer without closed forms.
pub fn pseudo_huber_target(dim: usize, scale: f64) -> Result<CompositeTarget> {
    let components = (0..dim)
        .map(|_| Coordinate1d::new(move |t: f64| scale * ((1.0 + t * t).sqrt() - 1.0), scale))
        .collect();
    CompositeTargetBuilder::new(
        dim,
        |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        |x: &[f64]| x.to_vec(),
    )
    .smoothness(1.0)
    .dissipativity(1.0, 0.0, vec![0.0; dim])
    .regularizer(RegularizerSpec::SeparableGeneric { components })
    .build()
}

/// Bayesian lasso posterior: f(x) = ||A x - b||^2 / 2, g = lambda ||x||_1.
///
/// The regularity constants come from the Gram matrix `A^T A`: its extreme
/// eigenvalues give the gradient Lipschitz constant and the dissipativity
/// curvature, and the least-squares solution is the dissipativity center
/// (where the offset vanishes).
pub fn lasso_posterior(
    design: &[Vec<f64>],
    response: &[f64],
    lambda: f64,
) -> Result<CompositeTarget> {
    let n = design.len();
    if n == 0 || n != response.len() {
        return Err(Error::InvalidParameter(
            "design and response must be non-empty and of matching length".into(),
        ));
    }
    let dim = design[0].len();
    if dim == 0 || design.iter().any(|row| row.len() != dim) {
        return Err(Error::InvalidParameter(
            "design rows must share a positive width".into(),
        ));
    }

    let a = nalgebra::DMatrix::from_fn(n, dim, |i, j| design[i][j]);
    let b = nalgebra::DVector::from_column_slice(response);
    let gram = a.transpose() * &a;
    let eigen = gram.clone().symmetric_eigen();
    let l_max = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let l_min = eigen.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if !(l_min > 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "design matrix is rank deficient (smallest Gram eigenvalue {l_min:e}); \
             the posterior is not dissipative"
        )));
    }
    let center = gram
        .clone()
        .lu()
        .solve(&(a.transpose() * &b))
        .ok_or_else(|| Error::InvalidParameter("could not solve the normal equations".into()))?;

    let design_f = design.to_vec();
    let response_f = response.to_vec();
    let design_g = design.to_vec();
    let response_g = response.to_vec();
    CompositeTargetBuilder::new(
        dim,
        move |x: &[f64]| {
            0.5 * design_f
                .iter()
                .zip(&response_f)
                .map(|(row, &y)| {
                    let r = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y;
                    r * r
                })
                .sum::<f64>()
        },
        move |x: &[f64]| {
            let mut grad = vec![0.0; x.len()];
            for (row, &y) in design_g.iter().zip(&response_g) {
                let r = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y;
                for (gi, &ai) in grad.iter_mut().zip(row) {
                    *gi += r * ai;
                }
            }
            grad
        },
    )
    .smoothness(l_max)
    .dissipativity(l_min, 0.0, center.iter().cloned().collect())
    .regularizer(RegularizerSpec::ScaledL1 { lambda })
    .build()
}
