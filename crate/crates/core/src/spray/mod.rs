//! Geodesic coefficients `G^i(x, y)` and what is built directly on them.

mod beta;
mod geodesic;

use std::sync::Arc;

use serde::Serialize;

use crate::diffcore::{bilinear, dot, Jet, Real};
use crate::domain::ChartDomain;
use crate::error::{FinslerError, Result};
use crate::linalg;
use crate::metrics::{check_site, FinslerMetric, RandersData, RiemannianField};

pub use beta::{beta_table, BetaContractions, BetaTable};
pub use geodesic::{geodesic_integrate, rk4_step, Trajectory, TrajectoryPoint, DEFAULT_DT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SprayKind {
    /// Assembled from derivatives of the fundamental tensor.
    Generic,
    /// Randers closed form `G~ + P y + Q`.
    RandersClosedForm,
    /// Levi-Civita spray of a Riemannian field.
    LeviCivita,
    /// Hand-written closed form.
    Analytic,
}

/// Geodesic coefficients of a metric or of a bare spray.
pub trait Spray: Send + Sync {
    fn domain(&self) -> &ChartDomain;

    /// Taylor expansion of each `G^i` around `(x, y)`, truncated at total
    /// degree `order`, in the variables `x^0..x^{n-1}, y^0..y^{n-1}`.
    fn expand(&self, x: &[f64], y: &[f64], order: usize) -> Result<Vec<Jet>>;

    fn kind(&self) -> SprayKind;

    fn dim(&self) -> usize {
        self.domain().dim
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.expand(x, y, 0)?.iter().map(Jet::value).collect())
    }

    /// The metric this spray belongs to, when there is one.
    fn metric(&self) -> Option<&dyn FinslerMetric> {
        None
    }
}

fn check_spray_site(domain: &ChartDomain, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != domain.dim || y.len() != domain.dim {
        return Err(FinslerError::Dimension {
            expected: domain.dim,
            got: x.len().min(y.len()),
        });
    }
    if !domain.contains(x) {
        return Err(FinslerError::OutsideDomain {
            x: x.to_vec(),
            domain: domain.name.clone(),
        });
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::ZeroVector);
    }
    Ok(())
}

fn truncate_all(g: Vec<Jet>, order: usize) -> Vec<Jet> {
    g.into_iter().map(|j| j.truncate(order)).collect()
}

/// Spray of an arbitrary Finsler metric:
/// `G^i = 1/4 g^il (2 d_k g_jl - d_l g_jk) y^j y^k`.
#[derive(Clone)]
pub struct MetricSpray {
    pub metric: Arc<dyn FinslerMetric>,
}

impl MetricSpray {
    pub fn new(metric: Arc<dyn FinslerMetric>) -> Self {
        Self { metric }
    }
}

impl Spray for MetricSpray {
    fn domain(&self) -> &ChartDomain {
        self.metric.domain()
    }

    fn expand(&self, x: &[f64], y: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_site(self.metric.as_ref(), x, y)?;
        let n = x.len();
        let (xs, ys) = Jet::seed_pair(x, y, order + 3);
        let f2 = self.metric.eval_jet(&xs, &ys).sq();
        let fy: Vec<Jet> = (0..n).map(|j| f2.diff(n + j)).collect();
        let mut g = vec![vec![Jet::constant(0.0); n]; n];
        for j in 0..n {
            for l in j..n {
                let v = fy[j].diff(n + l) * 0.5;
                g[l][j] = v.clone();
                g[j][l] = v;
            }
        }
        // dg[k][j][l] = d g_jl / dx^k
        let dg: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| (0..n).map(|l| g[j][l].diff(k)).collect())
                    .collect()
            })
            .collect();
        let ginv = linalg::inverse(&g).ok_or_else(|| FinslerError::NotPositiveDefinite {
            x: x.to_vec(),
            y: y.to_vec(),
        })?;
        let t: Vec<Jet> = (0..n)
            .map(|l| {
                let mut acc = Jet::constant(0.0);
                for j in 0..n {
                    for k in 0..n {
                        let c = dg[k][j][l].clone() * 2.0 - dg[l][j][k].clone();
                        acc = acc + c * ys[j].clone() * ys[k].clone();
                    }
                }
                acc
            })
            .collect();
        let out = (0..n).map(|i| dot(&ginv[i], &t) * 0.25).collect();
        Ok(truncate_all(out, order))
    }

    fn kind(&self) -> SprayKind {
        SprayKind::Generic
    }

    fn metric(&self) -> Option<&dyn FinslerMetric> {
        Some(self.metric.as_ref())
    }
}

/// `Gamma^i_jk` from jets of `a_ij` whose first `n` variables are the
/// chart coordinates. The result has one order less than `a`.
pub(crate) fn christoffel_jets<S: Real>(
    a: &[Vec<S>],
    diff: impl Fn(&S, usize) -> S,
) -> Option<Vec<Vec<Vec<S>>>> {
    let n = a.len();
    let inv = linalg::inverse(a)?;
    // da[k][i][j] = d a_ij / dx^k
    let da: Vec<Vec<Vec<S>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| (0..n).map(|j| diff(&a[i][j], k)).collect())
                .collect()
        })
        .collect();
    let mut gamma = vec![vec![vec![S::zero(); n]; n]; n];
    for j in 0..n {
        for k in j..n {
            let lowered: Vec<S> = (0..n)
                .map(|l| da[j][k][l].clone() + da[k][j][l].clone() - da[l][j][k].clone())
                .collect();
            for i in 0..n {
                let v = dot(&inv[i], &lowered) * 0.5;
                gamma[i][k][j] = v.clone();
                gamma[i][j][k] = v;
            }
        }
    }
    Some(gamma)
}

/// Levi-Civita symbols of `alpha` at `x`, indexed `[i][j][k]`.
pub fn christoffels(alpha: &dyn RiemannianField, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    if !alpha.domain().contains(x) {
        return Err(FinslerError::OutsideDomain {
            x: x.to_vec(),
            domain: alpha.domain().name.clone(),
        });
    }
    let a = alpha.coeffs_jet(&Jet::seed(x, 1));
    let gamma = christoffel_jets(&a, |j, k| j.diff(k))
        .ok_or_else(|| FinslerError::Singular { x: x.to_vec() })?;
    Ok(gamma
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(Jet::value).collect()).collect())
        .collect())
}

fn quadratic_spray(gamma: &[Vec<Vec<Jet>>], ys: &[Jet]) -> Vec<Jet> {
    gamma.iter().map(|gi| bilinear(gi, ys, ys) * 0.5).collect()
}

/// `G^i = 1/2 Gamma^i_jk y^j y^k`.
#[derive(Clone)]
pub struct RiemannianSpray {
    pub alpha: Arc<dyn RiemannianField>,
}

impl RiemannianSpray {
    pub fn new(alpha: Arc<dyn RiemannianField>) -> Self {
        Self { alpha }
    }
}

impl Spray for RiemannianSpray {
    fn domain(&self) -> &ChartDomain {
        self.alpha.domain()
    }

    fn expand(&self, x: &[f64], y: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_spray_site(self.domain(), x, y)?;
        let (xs, ys) = Jet::seed_pair(x, y, order + 1);
        let a = self.alpha.coeffs_jet(&xs);
        let gamma = christoffel_jets(&a, |j, k| j.diff(k))
            .ok_or_else(|| FinslerError::Singular { x: x.to_vec() })?;
        Ok(truncate_all(quadratic_spray(&gamma, &ys), order))
    }

    fn kind(&self) -> SprayKind {
        SprayKind::LeviCivita
    }
}

/// The pieces of the Randers spray `G^i = G~^i + P y^i + Q^i`.
pub struct RandersParts {
    pub g_tilde: Vec<Jet>,
    pub p: Jet,
    pub q: Vec<Jet>,
    pub ys: Vec<Jet>,
}

/// Randers spray pieces expanded to `order` around `(x, y)`.
pub fn randers_parts(r: &RandersData, x: &[f64], y: &[f64], order: usize) -> Result<RandersParts> {
    check_site(r, x, y)?;
    let n = x.len();
    let (xs, ys) = Jet::seed_pair(x, y, order + 1);
    let a = r.alpha.coeffs_jet(&xs);
    let b = r.beta.coeffs_jet(&xs);
    let singular = || FinslerError::Singular { x: x.to_vec() };
    let gamma = christoffel_jets(&a, |j, k| j.diff(k)).ok_or_else(singular)?;
    let ainv = linalg::inverse(&a).ok_or_else(singular)?;

    let b_cov = |i: usize, j: usize| {
        (0..n).fold(b[i].diff(j), |acc, l| acc - b[l].clone() * gamma[l][i][j].clone())
    };
    let cov: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| b_cov(i, j)).collect()).collect();
    let rr: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| (cov[i][j].clone() + cov[j][i].clone()) * 0.5).collect())
        .collect();
    let ss: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| (cov[i][j].clone() - cov[j][i].clone()) * 0.5).collect())
        .collect();
    // s^i_j = a^ip s_pj
    let s_up: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Jet::constant(0.0), |acc, p| acc + ainv[i][p].clone() * ss[p][j].clone()))
                .collect()
        })
        .collect();
    let s_low: Vec<Jet> = (0..n)
        .map(|j| (0..n).fold(Jet::constant(0.0), |acc, i| acc + b[i].clone() * s_up[i][j].clone()))
        .collect();

    let alpha = bilinear(&a, &ys, &ys).sqrt();
    let f = alpha.clone() + dot(&b, &ys);
    let r00 = bilinear(&rr, &ys, &ys);
    let s0 = dot(&s_low, &ys);
    let p = (r00 - alpha.clone() * s0 * 2.0) / (f * 2.0);
    let q: Vec<Jet> = s_up.iter().map(|row| alpha.clone() * dot(row, &ys)).collect();
    Ok(RandersParts {
        g_tilde: truncate_all(quadratic_spray(&gamma, &ys), order),
        p: p.truncate(order),
        q: truncate_all(q, order),
        ys,
    })
}

/// Closed-form Randers spray.
#[derive(Clone)]
pub struct RandersSpray {
    pub data: RandersData,
}

impl RandersSpray {
    pub fn new(data: RandersData) -> Self {
        Self { data }
    }
}

impl Spray for RandersSpray {
    fn domain(&self) -> &ChartDomain {
        self.data.alpha.domain()
    }

    fn expand(&self, x: &[f64], y: &[f64], order: usize) -> Result<Vec<Jet>> {
        let parts = randers_parts(&self.data, x, y, order)?;
        let out = (0..x.len())
            .map(|i| {
                parts.g_tilde[i].clone() + parts.p.clone() * parts.ys[i].clone() + parts.q[i].clone()
            })
            .collect();
        Ok(truncate_all(out, order))
    }

    fn kind(&self) -> SprayKind {
        SprayKind::RandersClosedForm
    }

    fn metric(&self) -> Option<&dyn FinslerMetric> {
        Some(&self.data)
    }
}

/// Closed-form spray written against jets.
pub type SprayFn = fn(&[Jet], &[Jet]) -> Vec<Jet>;

#[derive(Clone)]
pub struct AnalyticSpray {
    pub domain: ChartDomain,
    pub f: SprayFn,
    pub metric: Option<Arc<dyn FinslerMetric>>,
}

impl Spray for AnalyticSpray {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    fn expand(&self, x: &[f64], y: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_spray_site(&self.domain, x, y)?;
        let (xs, ys) = Jet::seed_pair(x, y, order);
        Ok((self.f)(&xs, &ys))
    }

    fn kind(&self) -> SprayKind {
        SprayKind::Analytic
    }

    fn metric(&self) -> Option<&dyn FinslerMetric> {
        self.metric.as_deref()
    }
}

/// `G^i y^j - G^j y^i`; vanishes exactly when `G` is a multiple of `y`,
/// which straight-line geodesics in the chart require.
pub fn projective_residual(spray: &dyn Spray, x: &[f64], y: &[f64]) -> Result<Vec<Vec<f64>>> {
    let g = spray.eval(x, y)?;
    let n = g.len();
    Ok((0..n)
        .map(|i| (0..n).map(|j| g[i] * y[j] - g[j] * y[i]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{AffineOneForm, Euclidean};

    #[test]
    fn flat_sprays_vanish() {
        let e: Arc<dyn FinslerMetric> = Arc::new(Euclidean::new(3));
        let (x, y) = ([0.1, 0.2, -0.3], [1.0, -0.5, 0.25]);
        for g in MetricSpray::new(e).eval(&x, &y).unwrap() {
            assert!(g.abs() < 1e-14);
        }
        let gamma = christoffels(&Euclidean::new(3), &x).unwrap();
        assert!(gamma.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_beta_gives_levi_civita() {
        let d = ChartDomain::whole(2);
        let alpha: Arc<dyn RiemannianField> = Arc::new(crate::gallery::PoincareDisk::default());
        let r = RandersData::new(alpha.clone(), Arc::new(AffineOneForm::zero(d)));
        let (x, y) = ([0.2, -0.1], [0.3, 0.9]);
        let a = RandersSpray::new(r).eval(&x, &y).unwrap();
        let b = RiemannianSpray::new(alpha).eval(&x, &y).unwrap();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
    }
}
