//! Volume densities, distortion and S-curvature.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diffcore::{bilinear, dot, Jet, Real};
use crate::error::{FinslerError, Result};
use crate::linalg;
use crate::metrics::{check_site, fundamental_tensor, FinslerMetric, RandersData, RiemannianField};
use crate::sampling::{rng_for, sphere_directions};
use crate::spray::{beta_table, rk4_step, Spray};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    ClosedFormRanders,
    RiemannianDet,
    Constant,
    MonteCarlo,
}

/// A density `sigma(x)` of the volume form `sigma dx^1...dx^n`.
pub trait VolumeDensity: Send + Sync {
    fn sigma(&self, x: &[f64]) -> Result<f64>;
    /// `d ln(sigma) / dx^i`.
    fn log_gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn method(&self) -> DensityMethod;
}

fn randers_sigma<S: Real>(r: &RandersData, x: &[S]) -> Option<S> {
    let n = x.len();
    let a = S::eval_riemannian(r.alpha.as_ref(), x);
    let b = S::eval_one_form(r.beta.as_ref(), x);
    let inv = linalg::inverse(&a)?;
    let bb = bilinear(&inv, &b, &b);
    let det = linalg::determinant(&a);
    Some((-bb + 1.0).powf((n as f64 + 1.0) / 2.0) * det.sqrt())
}

fn log_gradient_of(x: &[f64], f: impl Fn(&[Jet]) -> Option<Jet>) -> Result<Vec<f64>> {
    let s = f(&Jet::seed(x, 1)).ok_or_else(|| FinslerError::Singular { x: x.to_vec() })?;
    let v = s.value();
    Ok((0..x.len()).map(|i| s.partial_wrt(&[i]) / v).collect())
}

/// `(1 - |beta|^2)^{(n+1)/2} sqrt(det a)`.
pub struct RandersDensity(pub RandersData);

impl VolumeDensity for RandersDensity {
    fn sigma(&self, x: &[f64]) -> Result<f64> {
        randers_density(&self.0, x)
    }
    fn log_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        log_gradient_of(x, |xs| randers_sigma(&self.0, xs))
    }
    fn method(&self) -> DensityMethod {
        DensityMethod::ClosedFormRanders
    }
}

/// `sqrt(det a)`.
pub struct RiemannianDensity(pub Arc<dyn RiemannianField>);

impl VolumeDensity for RiemannianDensity {
    fn sigma(&self, x: &[f64]) -> Result<f64> {
        Ok(linalg::determinant(&self.0.coeffs(x)).sqrt())
    }
    fn log_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        log_gradient_of(x, |xs| Some(linalg::determinant(&self.0.coeffs_jet(xs)).sqrt()))
    }
    fn method(&self) -> DensityMethod {
        DensityMethod::RiemannianDet
    }
}

/// Density of a metric that does not depend on `x`.
pub struct ConstantDensity(pub f64);

impl VolumeDensity for ConstantDensity {
    fn sigma(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
    fn log_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; x.len()])
    }
    fn method(&self) -> DensityMethod {
        DensityMethod::Constant
    }
}

/// Monte Carlo density; values only, no derivatives.
pub struct McDensity {
    pub metric: Arc<dyn FinslerMetric>,
    pub n_samples: usize,
    pub seed: u64,
}

impl VolumeDensity for McDensity {
    fn sigma(&self, x: &[f64]) -> Result<f64> {
        Ok(bh_density_mc(self.metric.as_ref(), x, self.n_samples, self.seed)?.sigma)
    }
    fn log_gradient(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(FinslerError::NonDifferentiableDensity("monte carlo".into()))
    }
    fn method(&self) -> DensityMethod {
        DensityMethod::MonteCarlo
    }
}

pub fn randers_density(r: &RandersData, x: &[f64]) -> Result<f64> {
    randers_sigma(r, x).ok_or_else(|| FinslerError::Singular { x: x.to_vec() })
}

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * std::f64::consts::TAU / n as f64,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct McEstimate {
    pub sigma: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

const MC_CHUNK: usize = 65_536;
const BOX_DIRECTIONS: usize = 4096;
const BOX_PADDING: f64 = 0.02;

/// Busemann-Hausdorff density of the norm `norm` on `R^n` by hit-or-miss
/// sampling in a bounding box of its unit ball.
///
/// The box comes from the support function of the unit ball over a
/// direction set, padded by 2% of its width on every side.
pub fn bh_density_mc_norm(
    norm: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(FinslerError::InvalidParameter("n_samples must be >= 1".into()));
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for w in sphere_directions(n, BOX_DIRECTIONS, seed) {
        let f = norm(&w);
        if !(f > 0.0 && f.is_finite()) {
            return Err(FinslerError::UnboundedIndicatrix);
        }
        for i in 0..n {
            lo[i] = lo[i].min(w[i] / f);
            hi[i] = hi[i].max(w[i] / f);
        }
    }
    for i in 0..n {
        let pad = BOX_PADDING * (hi[i] - lo[i]);
        lo[i] -= pad;
        hi[i] += pad;
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, c as u64);
            let count = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut p = vec![0.0; n];
            let mut hits = 0;
            for _ in 0..count {
                for i in 0..n {
                    p[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                }
                if norm(&p) < 1.0 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    if hits == 0 {
        return Err(FinslerError::UnboundedIndicatrix);
    }
    let frac = hits as f64 / n_samples as f64;
    let sigma = unit_ball_volume(n) / (box_volume * frac);
    Ok(McEstimate {
        sigma,
        std_error: sigma * ((1.0 - frac) / (frac * n_samples as f64)).sqrt(),
        n_samples,
        seed,
    })
}

/// The Minkowski norm `F(x, .)`, with `alpha` and `beta` frozen at `x`
/// for Randers metrics.
pub fn norm_at<'a>(f: &'a dyn FinslerMetric, x: &[f64]) -> Box<dyn Fn(&[f64]) -> f64 + Sync + 'a> {
    match f.as_randers() {
        Some(r) => {
            let a = r.alpha.coeffs(x);
            let b = r.beta.coeffs(x);
            Box::new(move |y: &[f64]| bilinear(&a, y, y).max(0.0).sqrt() + dot(&b, y))
        }
        None => {
            let x = x.to_vec();
            Box::new(move |y: &[f64]| f.eval(&x, y))
        }
    }
}

pub fn bh_density_mc(f: &dyn FinslerMetric, x: &[f64], n_samples: usize, seed: u64) -> Result<McEstimate> {
    let mut probe = vec![0.0; f.dim()];
    probe[0] = 1.0;
    check_site(f, x, &probe)?;
    bh_density_mc_norm(norm_at(f, x).as_ref(), f.dim(), n_samples, seed)
}

/// `mu = ln(sqrt(det g_y) / sigma(x))`.
pub fn distortion(f: &dyn FinslerMetric, sigma: &dyn VolumeDensity, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = fundamental_tensor(f, x, y)?;
    Ok((g.det.sqrt() / sigma.sigma(x)?).ln())
}

/// `S = d G^i / d y^i - y^i d ln(sigma) / d x^i`.
pub fn s_curvature(spray: &dyn Spray, sigma: &dyn VolumeDensity, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    let g = spray.expand(x, y, 1)?;
    let div: f64 = (0..n).map(|i| g[i].partial_wrt(&[n + i])).sum();
    Ok(div - dot(y, &sigma.log_gradient(x)?))
}

/// `S` as the rate of change of the distortion along the geodesic through
/// `(x, y)`: a fourth-order central difference over RK4 steps of size `dt`.
pub fn s_curvature_dynamic(
    f: &dyn FinslerMetric,
    spray: &dyn Spray,
    sigma: &dyn VolumeDensity,
    x: &[f64],
    y: &[f64],
    dt: f64,
) -> Result<f64> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(FinslerError::InvalidParameter(format!("dt {dt} must be > 0")));
    }
    // distortion one and two steps along the geodesic in direction sign(h)
    let walk = |h: f64| -> Result<(f64, f64)> {
        let (x1, v1) = rk4_step(spray, x, y, h)?;
        let (x2, v2) = rk4_step(spray, &x1, &v1, h)?;
        Ok((distortion(f, sigma, &x1, &v1)?, distortion(f, sigma, &x2, &v2)?))
    };
    let (p1, p2) = walk(dt)?;
    let (m1, m2) = walk(-dt)?;
    Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * dt))
}

/// `rho = ln sqrt(1 - |beta|^2)` and its gradient
/// `rho_i = -b^j b_{j|i} / (1 - |beta|^2)`.
#[derive(Clone, Debug, Serialize)]
pub struct RhoGradient {
    pub rho: f64,
    pub rho_i: Vec<f64>,
}

pub fn rho_gradient(r: &RandersData, x: &[f64]) -> Result<RhoGradient> {
    let t = beta_table(r, x)?;
    let n = x.len();
    let one_minus = 1.0 - t.beta_norm_sq();
    Ok(RhoGradient {
        rho: one_minus.sqrt().ln(),
        rho_i: (0..n)
            .map(|i| -(0..n).map(|j| t.b_up[j] * t.b_cov[j][i]).sum::<f64>() / one_minus)
            .collect(),
    })
}

/// `S = (n+1)(P - rho_i y^i)` with `P = (r_00 - 2 alpha s_0) / (2F)`.
pub fn randers_s_curvature(r: &RandersData, x: &[f64], y: &[f64]) -> Result<f64> {
    check_site(r, x, y)?;
    let t = beta_table(r, x)?;
    let c = t.contract(y);
    let n = x.len() as f64;
    let p = (c.r00 - 2.0 * c.alpha * c.s0) / (2.0 * (c.alpha + c.beta));
    let one_minus = 1.0 - t.beta_norm_sq();
    let rho_y: f64 = (0..x.len())
        .map(|i| -(0..x.len()).map(|j| t.b_up[j] * t.b_cov[j][i]).sum::<f64>() / one_minus * y[i])
        .sum();
    Ok((n + 1.0) * (p - rho_y))
}

/// `r_ij + b_i s_j + b_j s_i`, which vanishes exactly where `S = 0`.
pub fn s_zero_criterion(r: &RandersData, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let t = beta_table(r, x)?;
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| t.r[i][j] + t.b[i] * t.s_low[j] + t.b[j] * t.s_low[i])
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn euclidean_density_is_one() {
        let norm = |y: &[f64]| dot(y, y).sqrt();
        let est = bh_density_mc_norm(&norm, 2, 1_000_000, 42).unwrap();
        assert!(est.std_error < 0.005);
        assert!((est.sigma - 1.0).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn chunking_is_thread_independent() {
        let norm = |y: &[f64]| dot(y, y).sqrt() + 0.3 * y[0];
        let a = bh_density_mc_norm(&norm, 3, 200_000, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| bh_density_mc_norm(&norm, 3, 200_000, 7).unwrap());
        assert_eq!(a.sigma, b.sigma);
    }
}
