//! Metric representations and the pointwise tensors built from `F`.

mod tensors;

use std::sync::Arc;

use crate::diffcore::{bilinear, dot, Jet, Real};
use crate::domain::ChartDomain;
use crate::error::{FinslerError, Result};
use crate::linalg;

pub use tensors::{
    cartan_first, cartan_norm, cartan_second, cartan_second_norm, check, check_site,
    fundamental_tensor, torsion_norms, torsion_ratios, CheckSummary, FundamentalTensor, TorsionRatios,
};

/// A Finsler metric `F(x, y)` on a single chart.
pub trait FinslerMetric: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Jet;

    fn dim(&self) -> usize {
        self.domain().dim
    }

    /// The `(alpha, beta)` decomposition when the metric is of Randers type.
    fn as_randers(&self) -> Option<&RandersData> {
        None
    }
}

/// Symmetric positive-definite `a_ij(x)`.
pub trait RiemannianField: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn coeffs(&self, x: &[f64]) -> Vec<Vec<f64>>;
    fn coeffs_jet(&self, x: &[Jet]) -> Vec<Vec<Jet>>;
}

/// Covector field `b_i(x)`.
pub trait OneFormField: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn coeffs(&self, x: &[f64]) -> Vec<f64>;
    fn coeffs_jet(&self, x: &[Jet]) -> Vec<Jet>;
}

/// Implement this to get [`FinslerMetric`] for both scalar types.
pub trait FinslerExpr: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn value<S: Real>(&self, x: &[S], y: &[S]) -> S;
    fn as_randers(&self) -> Option<&RandersData> {
        None
    }
}

/// Implement this to get [`RiemannianField`].
pub trait RiemannianExpr: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn value<S: Real>(&self, x: &[S]) -> Vec<Vec<S>>;
}

/// Implement this to get [`OneFormField`].
pub trait OneFormExpr: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn value<S: Real>(&self, x: &[S]) -> Vec<S>;
}

impl<T: FinslerExpr> FinslerMetric for T {
    fn domain(&self) -> &ChartDomain {
        FinslerExpr::domain(self)
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value(x, y)
    }
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.value(x, y)
    }
    fn as_randers(&self) -> Option<&RandersData> {
        FinslerExpr::as_randers(self)
    }
}

impl<T: RiemannianExpr> RiemannianField for T {
    fn domain(&self) -> &ChartDomain {
        RiemannianExpr::domain(self)
    }
    fn coeffs(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.value(x)
    }
    fn coeffs_jet(&self, x: &[Jet]) -> Vec<Vec<Jet>> {
        self.value(x)
    }
}

impl<T: OneFormExpr> OneFormField for T {
    fn domain(&self) -> &ChartDomain {
        OneFormExpr::domain(self)
    }
    fn coeffs(&self, x: &[f64]) -> Vec<f64> {
        self.value(x)
    }
    fn coeffs_jet(&self, x: &[Jet]) -> Vec<Jet> {
        self.value(x)
    }
}

/// `F = |y|`, also usable as the flat Riemannian field.
#[derive(Clone, Debug)]
pub struct Euclidean {
    domain: ChartDomain,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        Self::on(ChartDomain::whole(dim))
    }

    pub fn on(domain: ChartDomain) -> Self {
        Self { domain }
    }
}

impl FinslerExpr for Euclidean {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, _x: &[S], y: &[S]) -> S {
        dot(y, y).sqrt()
    }
}

impl RiemannianExpr for Euclidean {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, _x: &[S]) -> Vec<Vec<S>> {
        let n = self.domain.dim;
        (0..n)
            .map(|i| (0..n).map(|j| S::cst(if i == j { 1.0 } else { 0.0 })).collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ConstantRiemannian {
    pub a: Vec<Vec<f64>>,
    domain: ChartDomain,
}

impl ConstantRiemannian {
    pub fn new(a: Vec<Vec<f64>>, domain: ChartDomain) -> Result<Self> {
        if a.len() != domain.dim || a.iter().any(|r| r.len() != domain.dim) {
            return Err(FinslerError::InvalidParameter("matrix shape".into()));
        }
        if linalg::to_dmatrix(&a).cholesky().is_none() {
            return Err(FinslerError::InvalidParameter(
                "matrix is not positive definite".into(),
            ));
        }
        Ok(Self { a, domain })
    }
}

impl RiemannianExpr for ConstantRiemannian {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, _x: &[S]) -> Vec<Vec<S>> {
        self.a
            .iter()
            .map(|r| r.iter().map(|&v| S::cst(v)).collect())
            .collect()
    }
}

/// `b_i(x) = c_i + m_ij x^j`.
#[derive(Clone, Debug)]
pub struct AffineOneForm {
    pub c: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    domain: ChartDomain,
}

impl AffineOneForm {
    pub fn constant(c: Vec<f64>, domain: ChartDomain) -> Self {
        let n = c.len();
        Self {
            c,
            m: vec![vec![0.0; n]; n],
            domain,
        }
    }

    pub fn zero(domain: ChartDomain) -> Self {
        Self::constant(vec![0.0; domain.dim], domain)
    }

    pub fn new(c: Vec<f64>, m: Vec<Vec<f64>>, domain: ChartDomain) -> Self {
        Self { c, m, domain }
    }
}

impl OneFormExpr for AffineOneForm {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        self.c
            .iter()
            .zip(&self.m)
            .map(|(&c, row)| {
                row.iter()
                    .zip(x)
                    .fold(S::cst(c), |acc, (&m, xj)| acc + xj.clone() * m)
            })
            .collect()
    }
}

/// `F = sqrt(a_ij y^i y^j) + b_i y^i`.
#[derive(Clone)]
pub struct RandersData {
    pub alpha: Arc<dyn RiemannianField>,
    pub beta: Arc<dyn OneFormField>,
}

impl RandersData {
    pub fn new(alpha: Arc<dyn RiemannianField>, beta: Arc<dyn OneFormField>) -> Self {
        Self { alpha, beta }
    }

    /// `F = alpha`.
    pub fn riemannian(alpha: Arc<dyn RiemannianField>) -> Self {
        let beta = Arc::new(AffineOneForm::zero(alpha.domain().clone()));
        Self { alpha, beta }
    }

    pub fn alpha_at<S: Real>(&self, x: &[S], y: &[S]) -> S {
        bilinear(&S::eval_riemannian(self.alpha.as_ref(), x), y, y).sqrt()
    }

    pub fn beta_at<S: Real>(&self, x: &[S], y: &[S]) -> S {
        dot(&S::eval_one_form(self.beta.as_ref(), x), y)
    }
}

impl FinslerExpr for RandersData {
    fn domain(&self) -> &ChartDomain {
        self.alpha.domain()
    }
    fn value<S: Real>(&self, x: &[S], y: &[S]) -> S {
        self.alpha_at(x, y) + self.beta_at(x, y)
    }
    fn as_randers(&self) -> Option<&RandersData> {
        Some(self)
    }
}

/// `|beta|_alpha(x) = sqrt(a^ij b_i b_j)`.
pub fn beta_norm(r: &RandersData, x: &[f64]) -> Result<f64> {
    let a = r.alpha.coeffs(x);
    let b = r.beta.coeffs(x);
    let inv = linalg::inverse(&a).ok_or_else(|| FinslerError::Singular { x: x.to_vec() })?;
    Ok(bilinear(&inv, &b, &b).max(0.0).sqrt())
}

/// Rejection threshold for `|beta|_alpha`.
pub const RANDERS_BOUNDARY: f64 = 1.0 - 1e-12;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randers_is_alpha_plus_beta() {
        let d = ChartDomain::whole(2);
        let r = RandersData::new(
            Arc::new(ConstantRiemannian::new(vec![vec![2.0, 0.5], vec![0.5, 1.0]], d.clone()).unwrap()),
            Arc::new(AffineOneForm::new(vec![0.1, 0.2], vec![vec![0.3, 0.0], vec![0.0, -0.1]], d)),
        );
        let (x, y) = ([0.4, -0.2], [0.7, 1.1]);
        let alpha = (2.0 * 0.49 + 2.0 * 0.5 * 0.77 + 1.21f64).sqrt();
        let beta = (0.1 + 0.12) * 0.7 + (0.2 + 0.02) * 1.1;
        assert_eq!(r.eval(&x, &y), r.alpha_at(&x, &y) + r.beta_at(&x, &y));
        assert!((r.eval(&x, &y) - alpha - beta).abs() < 1e-15);
    }

    #[test]
    fn beta_norm_of_zero_form() {
        let r = RandersData::riemannian(Arc::new(Euclidean::new(3)));
        assert_eq!(beta_norm(&r, &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }
}
