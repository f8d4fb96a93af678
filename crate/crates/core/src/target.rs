//! Composite targets `pi(x) ~ exp(-f(x) - g(x))` and their regularizers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::math::norm2;
use crate::oracle::ProxOracle;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Scalar1dFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One coordinate of a generic separable regularizer: a convex 1D function
/// with a known Lipschitz bound and, optionally, its non-smooth points.
#[derive(Clone)]
pub struct Coordinate1d {
    pub g: Scalar1dFn,
    pub lipschitz: f64,
    /// Locations where `g` is not differentiable; the quadrature backing the
    /// partition function splits panels there.
    pub kinks: Vec<f64>,
}

impl Coordinate1d {
    pub fn new(g: impl Fn(f64) -> f64 + Send + Sync + 'static, lipschitz: f64) -> Self {
        Self {
            g: Arc::new(g),
            lipschitz,
            kinks: Vec::new(),
        }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

/// A caller-supplied regularizer: value, optional subgradient and proximity
/// oracles, and a matching proximal sampling oracle.
#[derive(Clone)]
pub struct CustomRegularizer {
    pub g: ScalarFn,
    pub subgrad: Option<VectorFn>,
    pub prox: Option<Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>>,
    pub oracle: Arc<dyn ProxOracle>,
}

/// Structured description of the non-smooth part `g`.
#[derive(Clone)]
pub enum RegularizerSpec {
    /// g = 0.
    Zero,
    /// g(x) = lambda * ||x||_1. Lipschitz constant lambda * sqrt(d).
    ScaledL1 { lambda: f64 },
    /// g(x) = sum_i g_i(x_i) with caller-supplied convex components.
    SeparableGeneric { components: Vec<Coordinate1d> },
    /// g(x) = sum_j w_j * ||x_{G_j}||_2 over disjoint groups covering all
    /// coordinates. Lipschitz constant sqrt(sum_j w_j^2).
    GroupLasso {
        groups: Vec<Vec<usize>>,
        weights: Vec<f64>,
    },
    /// Fully caller-supplied regularizer and sampling oracle.
    Custom(CustomRegularizer),
}

impl fmt::Debug for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegularizerSpec::Zero => write!(f, "Zero"),
            RegularizerSpec::ScaledL1 { lambda } => write!(f, "ScaledL1(lambda={lambda})"),
            RegularizerSpec::SeparableGeneric { components } => {
                write!(f, "SeparableGeneric({} components)", components.len())
            }
            RegularizerSpec::GroupLasso { groups, weights } => {
                write!(f, "GroupLasso(groups={groups:?}, weights={weights:?})")
            }
            RegularizerSpec::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl RegularizerSpec {
    /// Validate internal consistency against the ambient dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            RegularizerSpec::Zero => Ok(()),
            RegularizerSpec::ScaledL1 { lambda } => {
                if !(*lambda > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "l1 scale must be positive, got {lambda}"
                    )));
                }
                Ok(())
            }
            RegularizerSpec::SeparableGeneric { components } => {
                if components.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: components.len(),
                    });
                }
                Ok(())
            }
            RegularizerSpec::GroupLasso { groups, weights } => {
                if groups.len() != weights.len() {
                    return Err(Error::InvalidParameter(
                        "one weight per group is required".into(),
                    ));
                }
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "group weights must be positive".into(),
                    ));
                }
                let mut seen = vec![false; dim];
                for group in groups {
                    if group.is_empty() {
                        return Err(Error::InvalidParameter("empty group".into()));
                    }
                    for &idx in group {
                        if idx >= dim {
                            return Err(Error::InvalidParameter(format!(
                                "group index {idx} out of range for dimension {dim}"
                            )));
                        }
                        if seen[idx] {
                            return Err(Error::InvalidParameter(format!(
                                "coordinate {idx} appears in two groups"
                            )));
                        }
                        seen[idx] = true;
                    }
                }
                if seen.iter().any(|s| !s) {
                    return Err(Error::InvalidParameter(
                        "groups must cover every coordinate".into(),
                    ));
                }
                Ok(())
            }
            RegularizerSpec::Custom(_) => Ok(()),
        }
    }

    /// Lipschitz constant of `g` implied by the structure, where derivable.
    pub fn lipschitz_bound(&self, dim: usize) -> Option<f64> {
        match self {
            RegularizerSpec::Zero => Some(0.0),
            RegularizerSpec::ScaledL1 { lambda } => Some(lambda * (dim as f64).sqrt()),
            RegularizerSpec::SeparableGeneric { components } => Some(
                components
                    .iter()
                    .map(|c| c.lipschitz * c.lipschitz)
                    .sum::<f64>()
                    .sqrt(),
            ),
            RegularizerSpec::GroupLasso { weights, .. } => {
                Some(weights.iter().map(|w| w * w).sum::<f64>().sqrt())
            }
            RegularizerSpec::Custom(_) => None,
        }
    }
}

/// The pair `(f, g)` with oracles for `f`, its gradient, the structured `g`,
/// and the regularity constants the tuning helpers need.
///
/// Immutable after construction; all evaluation methods are pure, so one
/// target can be shared across concurrently running chains.
#[derive(Clone)]
pub struct CompositeTarget {
    dim: usize,
    f_value: ScalarFn,
    f_grad: VectorFn,
    g_spec: RegularizerSpec,
    /// Lipschitz constant of the gradient of f.
    pub smoothness_l: f64,
    /// Dissipativity curvature (strictly positive).
    pub dissip_mu: f64,
    /// Dissipativity offset.
    pub dissip_beta: f64,
    /// Dissipativity center, also used as the default chain start.
    pub dissip_center: Vec<f64>,
    /// Lipschitz constant of g.
    pub lipschitz_md: f64,
}

impl fmt::Debug for CompositeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeTarget")
            .field("dim", &self.dim)
            .field("g_spec", &self.g_spec)
            .field("smoothness_l", &self.smoothness_l)
            .field("dissip_mu", &self.dissip_mu)
            .field("dissip_beta", &self.dissip_beta)
            .field("lipschitz_md", &self.lipschitz_md)
            .finish()
    }
}

pub struct CompositeTargetBuilder {
    dim: usize,
    f_value: ScalarFn,
    f_grad: VectorFn,
    g_spec: RegularizerSpec,
    smoothness_l: f64,
    dissip_mu: f64,
    dissip_beta: f64,
    dissip_center: Option<Vec<f64>>,
    lipschitz_md: Option<f64>,
}

impl CompositeTargetBuilder {
    pub fn new(
        dim: usize,
        f_value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        f_grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f_value: Arc::new(f_value),
            f_grad: Arc::new(f_grad),
            g_spec: RegularizerSpec::Zero,
            smoothness_l: 0.0,
            dissip_mu: 1.0,
            dissip_beta: 0.0,
            dissip_center: None,
            lipschitz_md: None,
        }
    }

    pub fn regularizer(mut self, g_spec: RegularizerSpec) -> Self {
        self.g_spec = g_spec;
        self
    }

    pub fn smoothness(mut self, l: f64) -> Self {
        self.smoothness_l = l;
        self
    }

    pub fn dissipativity(mut self, mu: f64, beta: f64, center: Vec<f64>) -> Self {
        self.dissip_mu = mu;
        self.dissip_beta = beta;
        self.dissip_center = Some(center);
        self
    }

    /// Override the structural Lipschitz constant of g (required for Custom).
    pub fn lipschitz_md(mut self, md: f64) -> Self {
        self.lipschitz_md = Some(md);
        self
    }

    pub fn build(self) -> Result<CompositeTarget> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if self.smoothness_l < 0.0 {
            return Err(Error::InvalidParameter(
                "smoothness constant must be nonnegative".into(),
            ));
        }
        if !(self.dissip_mu > 0.0) {
            return Err(Error::InvalidParameter(
                "dissipativity mu must be strictly positive".into(),
            ));
        }
        if self.dissip_beta < 0.0 {
            return Err(Error::InvalidParameter(
                "dissipativity beta must be nonnegative".into(),
            ));
        }
        self.g_spec.validate(self.dim)?;
        let center = self.dissip_center.unwrap_or_else(|| vec![0.0; self.dim]);
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: center.len(),
            });
        }
        let lipschitz_md = match self.lipschitz_md {
            Some(md) if md >= 0.0 => md,
            Some(md) => {
                return Err(Error::InvalidParameter(format!(
                    "Lipschitz constant of g must be nonnegative, got {md}"
                )))
            }
            None => self.g_spec.lipschitz_bound(self.dim).ok_or_else(|| {
                Error::InvalidParameter(
                    "custom regularizers must supply the Lipschitz constant of g".into(),
                )
            })?,
        };
        Ok(CompositeTarget {
            dim: self.dim,
            f_value: self.f_value,
            f_grad: self.f_grad,
            g_spec: self.g_spec,
            smoothness_l: self.smoothness_l,
            dissip_mu: self.dissip_mu,
            dissip_beta: self.dissip_beta,
            dissip_center: center,
            lipschitz_md,
        })
    }
}

impl CompositeTarget {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn g_spec(&self) -> &RegularizerSpec {
        &self.g_spec
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn f_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok((self.f_value)(x))
    }

    pub fn f_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let grad = (self.f_grad)(x);
        if grad.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grad.len(),
            });
        }
        Ok(grad)
    }

    /// g(x), evaluated from the structured description.
    pub fn eval_g(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match &self.g_spec {
            RegularizerSpec::Zero => 0.0,
            RegularizerSpec::ScaledL1 { lambda } => {
                lambda * x.iter().map(|v| v.abs()).sum::<f64>()
            }
            RegularizerSpec::SeparableGeneric { components } => components
                .iter()
                .zip(x)
                .map(|(c, &v)| (c.g)(v))
                .sum::<f64>(),
            RegularizerSpec::GroupLasso { groups, weights } => groups
                .iter()
                .zip(weights)
                .map(|(group, w)| {
                    w * group
                        .iter()
                        .map(|&i| x[i] * x[i])
                        .sum::<f64>()
                        .sqrt()
                })
                .sum::<f64>(),
            RegularizerSpec::Custom(custom) => (custom.g)(x),
        })
    }

    /// U(x) = f(x) + g(x).
    pub fn eval_u(&self, x: &[f64]) -> Result<f64> {
        let value = self.f_value(x)? + self.eval_g(x)?;
        if !value.is_finite() {
            return Err(Error::NonFinitePotential { value });
        }
        Ok(value)
    }

    /// One element of the subdifferential of g at `x`.
    ///
    /// At kinks the minimal-norm element is returned: 0 for `|.|` at the
    /// origin and the zero vector for a group norm at the group origin.
    /// Generic separable components fall back to a symmetric difference
    /// quotient, which converges to the midpoint of the one-sided slopes and
    /// therefore stays inside the subdifferential interval.
    pub fn subgrad_g(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match &self.g_spec {
            RegularizerSpec::Zero => Ok(vec![0.0; self.dim]),
            RegularizerSpec::ScaledL1 { lambda } => {
                Ok(x.iter().map(|&v| lambda * sign(v)).collect())
            }
            RegularizerSpec::SeparableGeneric { components } => Ok(components
                .iter()
                .zip(x)
                .map(|(c, &v)| {
                    let h = 1e-6 * v.abs().max(1.0);
                    ((c.g)(v + h) - (c.g)(v - h)) / (2.0 * h)
                })
                .collect()),
            RegularizerSpec::GroupLasso { groups, weights } => {
                let mut out = vec![0.0; self.dim];
                for (group, w) in groups.iter().zip(weights) {
                    let norm = group.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        for &i in group {
                            out[i] = w * x[i] / norm;
                        }
                    }
                }
                Ok(out)
            }
            RegularizerSpec::Custom(custom) => match &custom.subgrad {
                Some(sg) => Ok(sg(x)),
                None => Err(Error::Unsupported(
                    "custom regularizer has no subgradient oracle".into(),
                )),
            },
        }
    }

    /// ||grad f(x0) + v||, v in the subdifferential of g at the center.
    pub fn grad_norm_at_center(&self) -> Result<f64> {
        let grad = self.f_grad(&self.dissip_center)?;
        let sub = self.subgrad_g(&self.dissip_center)?;
        let total: Vec<f64> = grad.iter().zip(&sub).map(|(a, b)| a + b).collect();
        Ok(norm2(&total))
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn quadratic(dim: usize) -> CompositeTargetBuilder {
        CompositeTargetBuilder::new(
            dim,
            |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            |x: &[f64]| x.to_vec(),
        )
        .smoothness(1.0)
        .dissipativity(1.0, 0.0, vec![0.0; dim])
    }

    fn zero_f(dim: usize) -> CompositeTargetBuilder {
        CompositeTargetBuilder::new(dim, |_| 0.0, move |x: &[f64]| vec![0.0; x.len()])
            .dissipativity(1.0, 0.0, vec![0.0; dim])
    }

    #[test]
    fn eval_u_examples() {
        // quadratic minimum
        let t = quadratic(2).build().unwrap();
        assert_eq!(t.eval_u(&[0.0, 0.0]).unwrap(), 0.0);

        // scaled l1: 2 * (|1| + |-3|) = 8
        let t = zero_f(2)
            .regularizer(RegularizerSpec::ScaledL1 { lambda: 2.0 })
            .build()
            .unwrap();
        assert_eq!(t.eval_u(&[1.0, -3.0]).unwrap(), 8.0);

        // group lasso: sqrt(9 + 16) + 5 = 10
        let t = zero_f(3)
            .regularizer(RegularizerSpec::GroupLasso {
                groups: vec![vec![0, 1], vec![2]],
                weights: vec![1.0, 1.0],
            })
            .build()
            .unwrap();
        assert_eq!(t.eval_u(&[3.0, 4.0, 5.0]).unwrap(), 10.0);
    }

    #[test]
    fn eval_u_is_bitwise_deterministic() {
        let t = quadratic(3)
            .regularizer(RegularizerSpec::ScaledL1 { lambda: 0.7 })
            .build()
            .unwrap();
        let x = [0.1, -2.3, 4.5];
        let a = t.eval_u(&x).unwrap();
        let b = t.eval_u(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let t = quadratic(2).build().unwrap();
        assert!(matches!(
            t.eval_u(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));

        let bad = CompositeTargetBuilder::new(1, |_| f64::INFINITY, |_| vec![0.0])
            .dissipativity(1.0, 0.0, vec![0.0])
            .build()
            .unwrap();
        assert!(matches!(
            bad.eval_u(&[0.0]),
            Err(Error::NonFinitePotential { .. })
        ));
    }

    #[test]
    fn subgrad_examples() {
        let t = zero_f(2)
            .regularizer(RegularizerSpec::ScaledL1 { lambda: 1.0 })
            .build()
            .unwrap();
        assert_eq!(t.subgrad_g(&[2.0, -1.0]).unwrap(), vec![1.0, -1.0]);

        let t = zero_f(1)
            .regularizer(RegularizerSpec::ScaledL1 { lambda: 1.0 })
            .build()
            .unwrap();
        assert_eq!(t.subgrad_g(&[0.0]).unwrap(), vec![0.0]);

        let t = zero_f(2)
            .regularizer(RegularizerSpec::GroupLasso {
                groups: vec![vec![0, 1]],
                weights: vec![1.0],
            })
            .build()
            .unwrap();
        let sg = t.subgrad_g(&[3.0, 4.0]).unwrap();
        assert!((sg[0] - 0.6).abs() < 1e-15 && (sg[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn group_partition_is_enforced() {
        let overlap = RegularizerSpec::GroupLasso {
            groups: vec![vec![0, 1], vec![1]],
            weights: vec![1.0, 1.0],
        };
        assert!(overlap.validate(2).is_err());

        let gap = RegularizerSpec::GroupLasso {
            groups: vec![vec![0]],
            weights: vec![1.0],
        };
        assert!(gap.validate(2).is_err());
    }

    #[test]
    fn l1_lipschitz_witness_on_random_pairs() {
        let dim = 4;
        let lambda = 1.3;
        let t = zero_f(dim)
            .regularizer(RegularizerSpec::ScaledL1 { lambda })
            .build()
            .unwrap();
        let md = lambda * (dim as f64).sqrt();
        assert_eq!(t.lipschitz_md, md);
        let mut rng = RngStream::root(5);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..dim).map(|_| 4.0 * rng.standard_normal()).collect();
            let y: Vec<f64> = (0..dim).map(|_| 4.0 * rng.standard_normal()).collect();
            let diff = (t.eval_g(&x).unwrap() - t.eval_g(&y).unwrap()).abs();
            let dist = crate::math::norm2(&crate::math::sub(&x, &y));
            assert!(diff <= md * dist + 1e-12);
        }
    }

    #[test]
    fn subgrad_norm_bounded_by_md() {
        let t = zero_f(3)
            .regularizer(RegularizerSpec::GroupLasso {
                groups: vec![vec![0, 2], vec![1]],
                weights: vec![2.0, 0.5],
            })
            .build()
            .unwrap();
        let mut rng = RngStream::root(6);
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| 3.0 * rng.standard_normal()).collect();
            let sg = t.subgrad_g(&x).unwrap();
            assert!(norm2(&sg) <= t.lipschitz_md + 1e-12);
        }
    }

    #[test]
    fn gradient_agrees_with_finite_differences_up_to_smoothness() {
        let t = quadratic(3).build().unwrap();
        let mut rng = RngStream::root(7);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.standard_normal()).collect();
            let h: Vec<f64> = (0..3).map(|_| 0.1 * rng.standard_normal()).collect();
            let xh = crate::math::axpy(&x, 1.0, &h);
            let lin = t.f_value(&xh).unwrap()
                - t.f_value(&x).unwrap()
                - crate::math::dot(&t.f_grad(&x).unwrap(), &h);
            let bound = 0.5 * t.smoothness_l * crate::math::dot(&h, &h);
            assert!(lin.abs() <= bound + 1e-12);
        }
    }
}
