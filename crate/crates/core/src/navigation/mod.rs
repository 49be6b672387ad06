//! Zermelo navigation: the metric whose unit ball is the source unit ball
//! translated by a drift field.

use std::sync::Arc;

use serde::Serialize;

use crate::diffcore::{bilinear, dot, mat_vec, Jet, Layout, Real};
use crate::domain::ChartDomain;
use crate::error::{FinslerError, Result};
use crate::measures::{bh_density_mc_norm, norm_at, randers_density};
use crate::metrics::{
    check_site, FinslerMetric, OneFormExpr, RandersData, RiemannianExpr, RiemannianField,
};
use crate::sampling::{rng_for, sphere_directions};

/// A drift (wind) field `v(x)`.
pub trait DriftField: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn vector(&self, x: &[f64]) -> Vec<f64>;
    fn vector_jet(&self, x: &[Jet]) -> Vec<Jet>;
}

/// Implement this to get [`DriftField`].
pub trait DriftExpr: Send + Sync {
    fn domain(&self) -> &ChartDomain;
    fn value<S: Real>(&self, x: &[S]) -> Vec<S>;
}

impl<T: DriftExpr> DriftField for T {
    fn domain(&self) -> &ChartDomain {
        DriftExpr::domain(self)
    }
    fn vector(&self, x: &[f64]) -> Vec<f64> {
        self.value(x)
    }
    fn vector_jet(&self, x: &[Jet]) -> Vec<Jet> {
        self.value(x)
    }
}

/// `v = c (-x^1, x^0, 0, ...)`: rigid rotation in the first coordinate plane.
#[derive(Clone, Debug)]
pub struct RotationDrift {
    pub c: f64,
    domain: ChartDomain,
}

impl RotationDrift {
    pub fn new(c: f64, domain: ChartDomain) -> Self {
        Self { c, domain }
    }
}

impl DriftExpr for RotationDrift {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        let mut v = vec![S::zero(); x.len()];
        v[0] = -x[1].clone() * self.c;
        v[1] = x[0].clone() * self.c;
        v
    }
}

/// `v = -c x`: contraction toward the origin.
#[derive(Clone, Debug)]
pub struct RadialDrift {
    pub c: f64,
    domain: ChartDomain,
}

impl RadialDrift {
    pub fn new(c: f64, domain: ChartDomain) -> Self {
        Self { c, domain }
    }
}

impl DriftExpr for RadialDrift {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        x.iter().map(|xi| xi.clone() * -self.c).collect()
    }
}

/// Constant drift (zero included).
#[derive(Clone, Debug)]
pub struct ConstantDrift {
    pub v: Vec<f64>,
    domain: ChartDomain,
}

impl ConstantDrift {
    pub fn new(v: Vec<f64>, domain: ChartDomain) -> Self {
        Self { v, domain }
    }

    pub fn zero(domain: ChartDomain) -> Self {
        Self::new(vec![0.0; domain.dim], domain)
    }
}

impl DriftExpr for ConstantDrift {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, _x: &[S]) -> Vec<S> {
        self.v.iter().map(|&c| S::cst(c)).collect()
    }
}

/// `v_i = a_ij v^j` and `lambda = 1 - a(v, v)` at `x`.
fn lowered_drift<S: Real>(alpha: &dyn RiemannianField, v: &dyn DriftField, x: &[S]) -> (Vec<Vec<S>>, Vec<S>, S) {
    let a = S::eval_riemannian(alpha, x);
    let w = S::eval_drift(v, x);
    let w_low = mat_vec(&a, &w);
    let lambda = -dot(&w_low, &w) + 1.0;
    (a, w_low, lambda)
}

/// `a~_ij = (lambda a_ij + v_i v_j) / lambda^2`.
#[derive(Clone)]
pub struct NavigationAlpha {
    pub alpha: Arc<dyn RiemannianField>,
    pub drift: Arc<dyn DriftField>,
}

impl RiemannianExpr for NavigationAlpha {
    fn domain(&self) -> &ChartDomain {
        self.alpha.domain()
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<Vec<S>> {
        let (a, w, lambda) = lowered_drift(self.alpha.as_ref(), self.drift.as_ref(), x);
        let l2 = lambda.sq();
        a.iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, aij)| (lambda.clone() * aij.clone() + w[i].clone() * w[j].clone()) / l2.clone())
                    .collect()
            })
            .collect()
    }
}

/// `b~_i = -v_i / lambda`.
#[derive(Clone)]
pub struct NavigationBeta {
    pub alpha: Arc<dyn RiemannianField>,
    pub drift: Arc<dyn DriftField>,
}

impl OneFormExpr for NavigationBeta {
    fn domain(&self) -> &ChartDomain {
        self.alpha.domain()
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        let (_, w, lambda) = lowered_drift(self.alpha.as_ref(), self.drift.as_ref(), x);
        w.into_iter().map(|wi| -wi / lambda.clone()).collect()
    }
}

const DRIFT_PROBES: usize = 256;

/// Closed-form navigation data of a Riemannian source:
/// `F~ = sqrt(lambda alpha^2 + <v,y>^2) / lambda - <v,y> / lambda`.
pub fn zermelo_riemannian(alpha: Arc<dyn RiemannianField>, drift: Arc<dyn DriftField>) -> Result<RandersData> {
    let domain = alpha.domain().clone();
    for k in 0..DRIFT_PROBES {
        let x = domain.sample(&mut rng_for(0, k as u64), 0.999);
        let w = drift.vector(&x);
        let len = bilinear(&alpha.coeffs(&x), &w, &w).sqrt();
        if !(len < 1.0) {
            return Err(FinslerError::DriftTooStrong { x, value: len });
        }
    }
    Ok(zermelo_data(alpha, drift))
}

fn zermelo_data(alpha: Arc<dyn RiemannianField>, drift: Arc<dyn DriftField>) -> RandersData {
    RandersData::new(
        Arc::new(NavigationAlpha {
            alpha: alpha.clone(),
            drift: drift.clone(),
        }),
        Arc::new(NavigationBeta { alpha, drift }),
    )
}

const MAX_DOUBLINGS: usize = 200;
const MAX_NEWTON: usize = 60;

/// Solves `psi(t) = 1` for `t > 0`, given `psi(0) < 1` and `psi` convex and
/// unbounded; `psi` returns value and derivative.
fn solve_unit(psi: &dyn Fn(f64) -> (f64, f64), guess: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = guess.max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while psi(hi).0 <= 1.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(FinslerError::NoConvergence("no upper bracket".into()));
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if psi(mid).0 > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let (p, dp) = psi(t);
        if !(dp > 0.0) {
            return Err(FinslerError::NoConvergence(format!("psi'({t}) = {dp}")));
        }
        let next = (t - (p - 1.0) / dp).clamp(lo, hi);
        let step = (next - t).abs();
        t = next;
        if step <= 1e-15 * t {
            return Ok(t);
        }
    }
    Ok(t)
}

/// `v(x)`, provided `F(x, -v(x)) < 1`.
fn checked_drift(f: &dyn FinslerMetric, v: &dyn DriftField, x: &[f64]) -> Result<Vec<f64>> {
    let w = v.vector(x);
    if w.iter().all(|&c| c == 0.0) {
        return Ok(w);
    }
    let minus_w: Vec<f64> = w.iter().map(|c| -c).collect();
    let at_zero = f.eval(x, &minus_w);
    if !(at_zero < 1.0) {
        return Err(FinslerError::DriftTooStrong { x: x.to_vec(), value: at_zero });
    }
    Ok(w)
}

/// `F~(x, y) = 1 / t` where `F(x, t y - v(x)) = 1`.
pub fn zermelo_general(f: &dyn FinslerMetric, v: &dyn DriftField, x: &[f64], y: &[f64]) -> Result<f64> {
    check_site(f, x, y)?;
    let w = checked_drift(f, v, x)?;
    if w.iter().all(|&c| c == 0.0) {
        return Ok(f.eval(x, y));
    }
    let xs = Jet::lift(x);
    let layout = Layout::get(1, 1);
    let psi = |t: f64| {
        let tj = Jet::variable(&layout, 0, t);
        let z: Vec<Jet> = y.iter().zip(&w).map(|(yi, wi)| tj.clone() * *yi - *wi).collect();
        let out = f.eval_jet(&xs, &z);
        (out.value(), out.partial(&[1]))
    };
    let t = solve_unit(&psi, 1.0 / f.eval(x, y))?;
    Ok(1.0 / t)
}

/// Navigation norm at a fixed point, for sampling.
fn frozen_navigation_norm<'a>(
    f: &'a dyn FinslerMetric,
    v: &dyn DriftField,
    x: &[f64],
) -> Result<Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>> {
    let w = checked_drift(f, v, x)?;
    match f.as_randers() {
        Some(r) if r.beta.coeffs(x).iter().all(|&b| b == 0.0) => {
            // Riemannian source: closed-form navigation data, frozen at x
            let drift = ConstantDrift::new(w, f.domain().clone());
            let data = zermelo_data(r.alpha.clone(), Arc::new(drift));
            let (a, b) = (data.alpha.coeffs(x), data.beta.coeffs(x));
            Ok(Box::new(move |y: &[f64]| bilinear(&a, y, y).max(0.0).sqrt() + dot(&b, y)))
        }
        Some(r) => {
            let a = r.alpha.coeffs(x);
            let b = r.beta.coeffs(x);
            Ok(Box::new(move |y: &[f64]| {
                if y.iter().all(|&c| c == 0.0) {
                    return 0.0;
                }
                let psi = |t: f64| {
                    let z: Vec<f64> = y.iter().zip(&w).map(|(yi, wi)| t * yi - wi).collect();
                    let az = mat_vec(&a, &z);
                    let alpha = dot(&az, &z).sqrt();
                    (alpha + dot(&b, &z), dot(&az, y) / alpha + dot(&b, y))
                };
                let guess = 1.0 / (bilinear(&a, y, y).sqrt() + dot(&b, y));
                solve_unit(&psi, guess).map_or(f64::NAN, |t| 1.0 / t)
            }))
        }
        None => {
            let x = x.to_vec();
            let v_at: Vec<f64> = w;
            Ok(Box::new(move |y: &[f64]| {
                if y.iter().all(|&c| c == 0.0) {
                    return 0.0;
                }
                let drift = ConstantDrift::new(v_at.clone(), f.domain().clone());
                zermelo_general(f, &drift, &x, y).unwrap_or(f64::NAN)
            }))
        }
    }
}

/// `F` and drift `v` seen as the navigation metric `F~`.
#[derive(Clone)]
pub struct NavigationMetric {
    pub source: Arc<dyn FinslerMetric>,
    pub drift: Arc<dyn DriftField>,
}

impl NavigationMetric {
    pub fn new(source: Arc<dyn FinslerMetric>, drift: Arc<dyn DriftField>) -> Self {
        Self { source, drift }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        zermelo_general(self.source.as_ref(), self.drift.as_ref(), x, y)
    }

    pub fn domain(&self) -> &ChartDomain {
        self.source.domain()
    }
}

/// Max `|F(x, y - v) - 1|` over `F~`-unit vectors `y`.
pub fn indicatrix_shift_check(
    f: &dyn FinslerMetric,
    v: &dyn DriftField,
    x: &[f64],
    n_dirs: usize,
    seed: u64,
) -> Result<f64> {
    let w = v.vector(x);
    let mut worst = 0.0f64;
    for dir in sphere_directions(f.dim(), n_dirs, seed) {
        let t = zermelo_general(f, v, x, &dir)?;
        let y: Vec<f64> = dir.iter().map(|d| d / t).collect();
        let shifted: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a - b).collect();
        worst = worst.max((f.eval(x, &shifted) - 1.0).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeCheck {
    pub sigma_f: f64,
    pub sigma_f_tilde: f64,
    pub std_error_f: f64,
    pub std_error_f_tilde: f64,
    /// `|sigma_F - sigma_F~| / sigma_F`
    pub gap: f64,
    /// `max(1%, 3 combined standard errors)`, relative
    pub tolerance: f64,
    /// Closed-form densities when the source is Riemannian.
    pub closed_form: Option<(f64, f64)>,
    pub n_samples: usize,
    pub seed: u64,
}

impl VolumeCheck {
    pub fn pass(&self) -> bool {
        self.gap <= self.tolerance
    }
}

/// Busemann-Hausdorff densities of `F` and of its navigation metric at `x`.
pub fn volume_preservation_check(
    f: &dyn FinslerMetric,
    v: &dyn DriftField,
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<VolumeCheck> {
    let n = f.dim();
    let mut probe = vec![0.0; n];
    probe[0] = 1.0;
    check_site(f, x, &probe)?;
    let src = bh_density_mc_norm(norm_at(f, x).as_ref(), n, n_samples, seed)?;
    let nav = frozen_navigation_norm(f, v, x)?;
    let tilde = bh_density_mc_norm(nav.as_ref(), n, n_samples, seed.wrapping_add(1))?;
    let gap = (src.sigma - tilde.sigma).abs() / src.sigma;
    let combined = (src.std_error.powi(2) + tilde.std_error.powi(2)).sqrt() / src.sigma;
    let closed_form = match f.as_randers() {
        Some(r) if r.beta.coeffs(x).iter().all(|&b| b == 0.0) => {
            // the drift frozen at x gives the same coefficients at x
            let drift: Arc<dyn DriftField> = Arc::new(ConstantDrift::new(v.vector(x), f.domain().clone()));
            let nav_data = zermelo_data(r.alpha.clone(), drift);
            Some((randers_density(r, x)?, randers_density(&nav_data, x)?))
        }
        _ => None,
    };
    Ok(VolumeCheck {
        sigma_f: src.sigma,
        sigma_f_tilde: tilde.sigma,
        std_error_f: src.std_error,
        std_error_f_tilde: tilde.std_error,
        gap,
        tolerance: (3.0 * combined).max(0.01),
        closed_form,
        n_samples,
        seed,
    })
}

/// A curve given by positions and velocities at increasing parameter
/// values; interpolated as a cubic Hermite spline.
#[derive(Clone, Debug)]
pub struct SampledPath {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl SampledPath {
    pub fn from_fn(
        c: impl Fn(f64) -> Vec<f64>,
        dc: impl Fn(f64) -> Vec<f64>,
        t0: f64,
        t1: f64,
        knots: usize,
    ) -> Self {
        let knots = knots.max(2);
        let t: Vec<f64> = (0..knots)
            .map(|k| t0 + (t1 - t0) * k as f64 / (knots - 1) as f64)
            .collect();
        Self {
            x: t.iter().map(|&s| c(s)).collect(),
            v: t.iter().map(|&s| dc(s)).collect(),
            t,
        }
    }

    /// Position and velocity at local parameter `s` in `[0, 1]` on segment `k`.
    fn hermite(&self, k: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
        let h = self.t[k + 1] - self.t[k];
        let (p0, p1, m0, m1) = (&self.x[k], &self.x[k + 1], &self.v[k], &self.v[k + 1]);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let n = p0.len();
        let pos = (0..n)
            .map(|i| h00 * p0[i] + h10 * h * m0[i] + h01 * p1[i] + h11 * h * m1[i])
            .collect();
        let vel = (0..n)
            .map(|i| (d00 * p0[i] + d01 * p1[i]) / h + d10 * m0[i] + d11 * m1[i])
            .collect();
        (pos, vel)
    }
}

/// `T = int F~(c(t), c'(t)) dt` by composite Simpson with `refinement`
/// (even) subintervals per knot interval.
pub fn travel_time(f: &dyn FinslerMetric, v: &dyn DriftField, path: &SampledPath, refinement: usize) -> Result<f64> {
    let m = (refinement.max(2) + 1) / 2 * 2;
    let mut total = 0.0;
    for k in 0..path.t.len().saturating_sub(1) {
        let h = path.t[k + 1] - path.t[k];
        let mut acc = 0.0;
        for j in 0..=m {
            let (pos, vel) = path.hermite(k, j as f64 / m as f64);
            let w = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            if vel.iter().any(|&c| c != 0.0) {
                acc += w * zermelo_general(f, v, &pos, &vel)?;
            }
        }
        total += acc * h / (3.0 * m as f64);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Euclidean;

    #[test]
    fn zero_drift_reproduces_source() {
        let d = ChartDomain::unit_ball(2);
        let e = Euclidean::on(d.clone());
        let zero = ConstantDrift::zero(d);
        let y = [0.3, -1.7];
        let f = zermelo_general(&e, &zero, &[0.2, 0.1], &y).unwrap();
        assert!((f - e.eval(&[0.2, 0.1], &y)).abs() < 1e-12);
    }

    #[test]
    fn strong_drift_is_rejected() {
        let d = ChartDomain::whole(2);
        let e = Euclidean::on(d.clone());
        let v = ConstantDrift::new(vec![1.5, 0.0], d);
        assert!(matches!(
            zermelo_general(&e, &v, &[0.0, 0.0], &[1.0, 0.0]),
            Err(FinslerError::DriftTooStrong { .. })
        ));
        assert!(matches!(
            zermelo_riemannian(Arc::new(e), Arc::new(v)),
            Err(FinslerError::DriftTooStrong { .. })
        ));
    }

    #[test]
    fn euclidean_segment_length() {
        let d = ChartDomain::whole(2);
        let e = Euclidean::on(d.clone());
        let zero = ConstantDrift::zero(d);
        let path = SampledPath::from_fn(|t| vec![t, 2.0 * t], |_| vec![1.0, 2.0], 0.0, 1.0, 4);
        let t = travel_time(&e, &zero, &path, 8).unwrap();
        assert!((t - 5f64.sqrt()).abs() < 1e-12);
    }
}
