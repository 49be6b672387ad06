use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{beta_norm, FinslerMetric, RANDERS_BOUNDARY};
use crate::diffcore::{Jet, Layout, Real};
use crate::error::{FinslerError, Result};
use crate::linalg;
use crate::sampling::{fibonacci_sphere, gaussian_vector, rng_for, unit_vector};

/// Validates an evaluation site `(x, y)` for `f`.
pub fn check_site(f: &dyn FinslerMetric, x: &[f64], y: &[f64]) -> Result<()> {
    let n = f.dim();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(FinslerError::Dimension { expected: n, got: len });
        }
    }
    if !f.domain().contains(x) {
        return Err(FinslerError::OutsideDomain {
            x: x.to_vec(),
            domain: f.domain().name.clone(),
        });
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::ZeroVector);
    }
    if let Some(r) = f.as_randers() {
        let norm = beta_norm(r, x)?;
        if norm >= RANDERS_BOUNDARY {
            return Err(FinslerError::RandersBoundary { x: x.to_vec(), norm });
        }
    }
    Ok(())
}

/// `g_ij = 1/2 d^2 F^2 / dy^i dy^j` with its inverse and determinant.
#[derive(Clone, Debug)]
pub struct FundamentalTensor {
    pub g: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    pub det: f64,
}

impl FundamentalTensor {
    pub fn apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let (u, v) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
        u.dot(&(&self.g * v))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        linalg::to_rows(&self.g)
    }
}

pub fn fundamental_tensor(f: &dyn FinslerMetric, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
    check_site(f, x, y)?;
    let n = y.len();
    let ys = Jet::seed(y, 2);
    let f2 = f.eval_jet(&Jet::lift(x), &ys).sq();
    let g = DMatrix::from_fn(n, n, |i, j| 0.5 * f2.partial_wrt(&[i, j]));
    if g.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::NonFinite { x: x.to_vec(), y: y.to_vec() });
    }
    let chol = g.clone().cholesky().ok_or_else(|| FinslerError::NotPositiveDefinite {
        x: x.to_vec(),
        y: y.to_vec(),
    })?;
    let det = chol.determinant();
    let inv = chol.inverse();
    Ok(FundamentalTensor { g, inv, det })
}

fn directional_f2(f: &dyn FinslerMetric, x: &[f64], base: &[f64], dirs: &[&[f64]], order: usize) -> Jet {
    let layout = Layout::get(dirs.len(), order);
    let vars: Vec<Jet> = (0..dirs.len()).map(|k| Jet::variable(&layout, k, 0.0)).collect();
    let z: Vec<Jet> = (0..base.len())
        .map(|i| {
            dirs.iter()
                .zip(&vars)
                .fold(Jet::constant(base[i]), |acc, (d, t)| acc + t.clone() * d[i])
        })
        .collect();
    f.eval_jet(&Jet::lift(x), &z).sq()
}

/// `C_y(u, v, w) = 1/4 d^3/ds dt dr F^2(y + s u + t v + r w)`.
pub fn cartan_first(f: &dyn FinslerMetric, x: &[f64], y: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    check_site(f, x, y)?;
    Ok(0.25 * directional_f2(f, x, y, &[u, v, w], 3).partial(&[1, 1, 1]))
}

/// `C~_y(u, v, w, z) = 1/4 d^4 F^2 / ds dt dr dq`.
pub fn cartan_second(
    f: &dyn FinslerMetric,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
    z: &[f64],
) -> Result<f64> {
    check_site(f, x, y)?;
    Ok(0.25 * directional_f2(f, x, y, &[u, v, w, z], 4).partial(&[1, 1, 1, 1]))
}

/// Scale-free torsion ratios along a single transverse direction `u`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TorsionRatios {
    /// `F(y) |C_y(u,u,u)| / g_y(u,u)^{3/2}`
    pub first: f64,
    /// `F(y)^2 C~_y(u,u,u,u) / g_y(u,u)^2`, signed
    pub second: f64,
}

/// Torsion ratios at `(x, y)` in direction `u`. The caller is responsible
/// for `g_y(y, u) = 0`.
pub fn torsion_ratios(f: &dyn FinslerMetric, x: &[f64], y: &[f64], u: &[f64]) -> Result<TorsionRatios> {
    let jet = directional_f2(f, x, y, &[u], 4);
    let c = |k: u8| jet.coeff(&[k]);
    let f2 = c(0);
    let g_uu = c(2);
    if f2 <= 0.0 || g_uu <= 0.0 {
        return Err(FinslerError::NotPositiveDefinite { x: x.to_vec(), y: y.to_vec() });
    }
    let cartan = 1.5 * c(3);
    let cartan2 = 6.0 * c(4);
    Ok(TorsionRatios {
        first: f2.sqrt() * cartan.abs() / g_uu.powf(1.5),
        second: f2 * cartan2 / (g_uu * g_uu),
    })
}

/// `w` made `g_y`-orthogonal to `y`, using only directional derivatives.
fn orthogonalize(f: &dyn FinslerMetric, x: &[f64], y: &[f64], w: &[f64]) -> Vec<f64> {
    let jet = directional_f2(f, x, y, &[w], 1);
    let f2 = jet.value();
    let g_yw = 0.5 * jet.coeff(&[1]);
    w.iter().zip(y).map(|(wi, yi)| wi - g_yw / f2 * yi).collect()
}

const ANGLE_GRID: usize = 4096;
const COMPLEMENT_GRID: usize = 32;

fn plane_ratios(f: &dyn FinslerMetric, x: &[f64], theta: f64) -> Result<TorsionRatios> {
    let (s, c) = theta.sin_cos();
    let y = [c, s];
    let u = orthogonalize(f, x, &y, &[-s, c]);
    torsion_ratios(f, x, &y, &u)
}

fn golden_max(h: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut ha, mut hb) = (h(a), h(b));
    while hi - lo > 1e-11 {
        if ha >= hb {
            hi = b;
            b = a;
            hb = ha;
            a = hi - r * (hi - lo);
            ha = h(a);
        } else {
            lo = a;
            a = b;
            ha = hb;
            b = lo + r * (hi - lo);
            hb = h(b);
        }
    }
    ha.max(hb)
}

/// Grid maximum over the circle refined by golden-section search around
/// the three largest local maxima.
fn circle_max(values: &[f64], h: &dyn Fn(f64) -> f64) -> f64 {
    let m = values.len();
    let step = std::f64::consts::TAU / m as f64;
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&i| values[i] >= values[(i + m - 1) % m] && values[i] >= values[(i + 1) % m])
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let grid_best = values.iter().copied().fold(0.0, f64::max);
    peaks
        .into_iter()
        .take(3)
        .map(|i| {
            let t = step * i as f64;
            golden_max(h, t - step, t + step)
        })
        .fold(grid_best, f64::max)
}

/// Sampled `(|C|_x, |C~|_x)` in one pass over flags.
pub fn torsion_norms(f: &dyn FinslerMetric, x: &[f64], samples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = f.dim();
    let probe = {
        let mut y = vec![0.0; n];
        y[0] = 1.0;
        y
    };
    check_site(f, x, &probe)?;
    if samples == 0 {
        return Err(FinslerError::InvalidParameter("samples must be >= 1".into()));
    }
    match n {
        2 => {
            let m = samples.max(ANGLE_GRID);
            let grid = (0..m)
                .map(|k| plane_ratios(f, x, std::f64::consts::TAU * k as f64 / m as f64))
                .collect::<Result<Vec<_>>>()?;
            let firsts: Vec<f64> = grid.iter().map(|r| r.first).collect();
            let seconds: Vec<f64> = grid.iter().map(|r| r.second.abs()).collect();
            let h1 = |t: f64| plane_ratios(f, x, t).map_or(0.0, |r| r.first);
            let h2 = |t: f64| plane_ratios(f, x, t).map_or(0.0, |r| r.second.abs());
            Ok((circle_max(&firsts, &h1), circle_max(&seconds, &h2)))
        }
        3 => {
            let mut best = (0.0f64, 0.0f64);
            for p in fibonacci_sphere(samples) {
                let g = fundamental_tensor(f, x, &p)?;
                let basis = complement_basis(&g, &p);
                for k in 0..COMPLEMENT_GRID {
                    let (s, c) = (std::f64::consts::PI * k as f64 / COMPLEMENT_GRID as f64).sin_cos();
                    let u: Vec<f64> = (0..3).map(|i| c * basis[0][i] + s * basis[1][i]).collect();
                    let r = torsion_ratios(f, x, &p, &u)?;
                    best = (best.0.max(r.first), best.1.max(r.second.abs()));
                }
            }
            Ok(best)
        }
        _ => {
            let mut best = (0.0f64, 0.0f64);
            for k in 0..samples {
                let mut rng = rng_for(seed, k as u64);
                let y = unit_vector(&mut rng, n);
                let u = orthogonalize(f, x, &y, &gaussian_vector(&mut rng, n));
                let r = torsion_ratios(f, x, &y, &u)?;
                best = (best.0.max(r.first), best.1.max(r.second.abs()));
            }
            Ok(best)
        }
    }
}

/// `g_y`-orthonormal basis of the `g_y`-orthogonal complement of `y` (n = 3).
fn complement_basis(g: &FundamentalTensor, y: &[f64]) -> Vec<Vec<f64>> {
    let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut out: Vec<Vec<f64>> = Vec::new();
    let gyy = g.apply(y, y);
    for cand in e {
        if out.len() == 2 {
            break;
        }
        let mut w: Vec<f64> = cand.to_vec();
        let c = g.apply(y, &w) / gyy;
        w.iter_mut().zip(y).for_each(|(wi, yi)| *wi -= c * yi);
        for b in &out {
            let c = g.apply(b, &w);
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
        }
        let norm = g.apply(&w, &w).sqrt();
        if norm > 1e-6 * gyy.sqrt() {
            out.push(w.into_iter().map(|v| v / norm).collect());
        }
    }
    out
}

/// Sampled estimate of `|C|_x` (a lower bound of the supremum).
pub fn cartan_norm(f: &dyn FinslerMetric, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
    torsion_norms(f, x, samples, seed).map(|r| r.0)
}

/// Sampled estimate of `|C~|_x`.
pub fn cartan_second_norm(f: &dyn FinslerMetric, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
    torsion_norms(f, x, samples, seed).map(|r| r.1)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckSummary {
    pub n_samples: usize,
    /// max relative `|F(x, l y) - l F(x, y)|` over `l` in {0.5, 2, 7}
    pub homogeneity: f64,
    /// max relative `|y^i dF/dy^i - F|`
    pub euler: f64,
    /// max relative `|g_ij y^i y^j - F^2|`
    pub quadratic: f64,
    /// smallest eigenvalue of `g_y / F^2` seen
    pub min_eigenvalue: f64,
}

/// Homogeneity and positive-definiteness probe at seeded interior samples.
pub fn check(f: &dyn FinslerMetric, n_samples: usize, seed: u64) -> Result<CheckSummary> {
    let n = f.dim();
    let mut out = CheckSummary {
        n_samples,
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    for k in 0..n_samples {
        let mut rng = rng_for(seed, k as u64);
        let x = f.domain().sample(&mut rng, 0.95);
        let y = unit_vector(&mut rng, n);
        let fy = f.eval(&x, &y);
        for l in [0.5, 2.0, 7.0] {
            let ly: Vec<f64> = y.iter().map(|v| v * l).collect();
            out.homogeneity = out.homogeneity.max((f.eval(&x, &ly) - l * fy).abs() / (l * fy));
        }
        let grad = f.eval_jet(&Jet::lift(&x), &Jet::seed(&y, 1));
        let euler: f64 = (0..n).map(|i| y[i] * grad.partial_wrt(&[i])).sum();
        out.euler = out.euler.max((euler - fy).abs() / fy);
        let g = fundamental_tensor(f, &x, &y)?;
        out.quadratic = out.quadratic.max((g.apply(&y, &y) - fy * fy).abs() / (fy * fy));
        let eig = g.g.clone().symmetric_eigen().eigenvalues.min() / (fy * fy);
        out.min_eigenvalue = out.min_eigenvalue.min(eig);
    }
    Ok(out)
}

