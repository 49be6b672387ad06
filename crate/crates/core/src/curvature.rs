//! Riemann curvature of a spray, and the quantities derived from it.

use std::sync::Arc;

use serde::Serialize;

use crate::diffcore::{dot, Jet};
use crate::error::{FinslerError, Result};
use crate::metrics::{fundamental_tensor, FinslerMetric, FundamentalTensor, RandersData};
use crate::spray::{beta_table, MetricSpray, RandersSpray, RiemannianSpray, Spray};

/// `R^i_k` at `(x, y)`; `matrix[i][k]`.
#[derive(Clone, Debug, Serialize)]
pub struct RiemannOperator {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub ricci: f64,
}

impl RiemannOperator {
    fn new(x: &[f64], y: &[f64], matrix: Vec<Vec<f64>>) -> Self {
        let ricci = (0..matrix.len()).map(|i| matrix[i][i]).sum();
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            matrix,
            ricci,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `g_ij R^j_k`.
    pub fn lowered(&self, g: &FundamentalTensor) -> Vec<Vec<f64>> {
        let n = self.matrix.len();
        (0..n)
            .map(|i| (0..n).map(|k| (0..n).map(|j| g.g[(i, j)] * self.matrix[j][k]).sum()).collect())
            .collect()
    }

    /// `max_i |R^i_k y^k|`.
    pub fn annihilation_residual(&self) -> f64 {
        self.matrix
            .iter()
            .map(|row| dot(row, &self.y).abs())
            .fold(0.0, f64::max)
    }
}

/// Riemann curvature from an order-2 expansion of `G` in `(x, y)`.
fn riemann_from_expansion(g: &[Jet], y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let gv: Vec<f64> = g.iter().map(Jet::value).collect();
    let gy: Vec<Vec<f64>> = g
        .iter()
        .map(|gi| (0..n).map(|j| gi.partial_wrt(&[n + j])).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let mut r = 2.0 * g[i].partial_wrt(&[k]);
                    for j in 0..n {
                        r -= y[j] * g[i].partial_wrt(&[j, n + k]);
                        r += 2.0 * gv[j] * g[i].partial_wrt(&[n + j, n + k]);
                        r -= gy[i][j] * gy[j][k];
                    }
                    r
                })
                .collect()
        })
        .collect()
}

/// `R^i_k = 2 d_k G^i - y^j d_j d_{y^k} G^i + 2 G^j d_{y^j} d_{y^k} G^i
/// - d_{y^j} G^i d_{y^k} G^j`.
pub fn riemann(spray: &dyn Spray, x: &[f64], y: &[f64]) -> Result<RiemannOperator> {
    let g = spray.expand(x, y, 2)?;
    Ok(RiemannOperator::new(x, y, riemann_from_expansion(&g, y)))
}

pub fn ricci(spray: &dyn Spray, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(riemann(spray, x, y)?.ricci)
}

/// The two-dimensional Ricci shortcut and its ingredients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Ricci2d {
    pub ricci: f64,
    /// `S = G1_u + G2_v`
    pub s: f64,
    /// `G1_x + G2_y + G1_u G2_v - G1_v G2_u`
    pub bracket: f64,
}

/// `Ric = 2 (G1_x + G2_y + G1_u G2_v - G1_v G2_u) - S^2
/// - (u d_x + v d_y - 2 G1 d_u - 2 G2 d_v) S`.
pub fn ricci_2d(spray: &dyn Spray, x: &[f64], y: &[f64]) -> Result<Ricci2d> {
    if spray.dim() != 2 {
        return Err(FinslerError::Dimension {
            expected: 2,
            got: spray.dim(),
        });
    }
    let g = spray.expand(x, y, 2)?;
    let d = |i: usize, vars: &[usize]| g[i].partial_wrt(vars);
    // variables: 0 = x, 1 = y, 2 = u, 3 = v
    let s = d(0, &[2]) + d(1, &[3]);
    let s_at = |var: usize| d(0, &[2, var]) + d(1, &[3, var]);
    let bracket = d(0, &[0]) + d(1, &[1]) + d(0, &[2]) * d(1, &[3]) - d(0, &[3]) * d(1, &[2]);
    let transport = y[0] * s_at(0) + y[1] * s_at(1)
        - 2.0 * g[0].value() * s_at(2)
        - 2.0 * g[1].value() * s_at(3);
    Ok(Ricci2d {
        ricci: 2.0 * bracket - s * s - transport,
        s,
        bracket,
    })
}

/// The spray used for curvature of `f`: closed form for Randers metrics,
/// generic otherwise.
pub fn spray_for(f: Arc<dyn FinslerMetric>) -> Box<dyn Spray> {
    match f.as_randers() {
        Some(r) => Box::new(RandersSpray::new(r.clone())),
        None => Box::new(MetricSpray::new(f)),
    }
}

/// Flag curvature `K(P, y) = g_y(R_y u, u) / (g_y(y,y) g_y(u,u) - g_y(y,u)^2)`
/// for `P = span(y, u)`.
pub fn flag_curvature_with(
    f: &dyn FinslerMetric,
    spray: &dyn Spray,
    x: &[f64],
    y: &[f64],
    u: &[f64],
) -> Result<f64> {
    let g = fundamental_tensor(f, x, y)?;
    let (gyy, guu, gyu) = (g.apply(y, y), g.apply(u, u), g.apply(y, u));
    if !(gyy * guu - gyu * gyu > 1e-10 * gyy * guu) {
        return Err(FinslerError::DegenerateFlag);
    }
    // g_y-orthogonal transverse edge, so the result depends on the flag only
    let w: Vec<f64> = u.iter().zip(y).map(|(ui, yi)| ui - gyu / gyy * yi).collect();
    let r = riemann(spray, x, y)?;
    let rw: Vec<f64> = r.matrix.iter().map(|row| dot(row, &w)).collect();
    Ok(g.apply(&rw, &w) / (gyy * g.apply(&w, &w)))
}

pub fn flag_curvature(f: Arc<dyn FinslerMetric>, x: &[f64], y: &[f64], u: &[f64]) -> Result<f64> {
    let spray = spray_for(f.clone());
    flag_curvature_with(f.as_ref(), spray.as_ref(), x, y, u)
}

/// `R^i_k` of `spray` assembled from the curvature of `reference` and the
/// difference `H = G - G_ref`:
/// `R = R_ref + 2 H_{|k} - y^j (H_{|j})_{y^k} + 2 H^j H_{y^j y^k} - H_{y^j} H^j_{y^k}`,
/// with `H_{|k} = d_k H + H^j d_{y^j y^k} G_ref - H_{y^j} d_{y^k} G_ref^j`.
pub fn riemann_via_difference(
    spray: &dyn Spray,
    reference: &dyn Spray,
    reference_curvature: &RiemannOperator,
    x: &[f64],
    y: &[f64],
) -> Result<RiemannOperator> {
    let n = x.len();
    let g = spray.expand(x, y, 3)?;
    let gr = reference.expand(x, y, 3)?;
    let h: Vec<Jet> = g.iter().zip(&gr).map(|(a, b)| a - b).collect();
    let hy: Vec<Vec<Jet>> = h.iter().map(|hi| (0..n).map(|j| hi.diff(n + j)).collect()).collect();
    let gry: Vec<Vec<Jet>> = gr.iter().map(|gi| (0..n).map(|j| gi.diff(n + j)).collect()).collect();
    // h_bar[i][k] = H^i_{|k}, order 1
    let h_bar: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let mut acc = h[i].diff(k);
                    for j in 0..n {
                        acc = acc + h[j].clone() * gry[i][j].diff(n + k) - hy[i][j].clone() * gry[j][k].clone();
                    }
                    acc.truncate(1)
                })
                .collect()
        })
        .collect();
    let matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let mut r = reference_curvature.matrix[i][k] + 2.0 * h_bar[i][k].value();
                    for j in 0..n {
                        r -= y[j] * h_bar[i][j].partial_wrt(&[n + k]);
                        r += 2.0 * h[j].value() * h[i].partial_wrt(&[n + j, n + k]);
                        r -= hy[i][j].value() * hy[j][k].value();
                    }
                    r
                })
                .collect()
        })
        .collect();
    Ok(RiemannOperator::new(x, y, matrix))
}

/// Curvature of a Randers metric with vanishing S-curvature split as
/// `R^i_k = A + B / alpha`, with `A = residual_a`, `B = -residual_b`.
#[derive(Clone, Debug, Serialize)]
pub struct K0Residuals {
    /// `R_alpha + X`: the rational part of `R^i_k`.
    pub residual_a: Vec<Vec<f64>>,
    /// `Y`: minus the coefficient of `1/alpha`.
    pub residual_b: Vec<Vec<f64>>,
    /// Riemann curvature of `alpha` at the same point.
    pub alpha_curvature: Vec<Vec<f64>>,
    /// `max |r_ij + b_i s_j + b_j s_i|`; the split assumes this is zero.
    pub s_zero_residual: f64,
}

impl K0Residuals {
    pub fn max_a(&self) -> f64 {
        self.residual_a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_b(&self) -> f64 {
        self.residual_b.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `A - Y / alpha`, which equals `R^i_k` when S vanishes.
    pub fn assembled(&self, alpha: f64) -> Vec<Vec<f64>> {
        self.residual_a
            .iter()
            .zip(&self.residual_b)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a - b / alpha).collect())
            .collect()
    }
}

fn delta(i: usize, k: usize) -> f64 {
    if i == k {
        1.0
    } else {
        0.0
    }
}

/// Both vanish exactly when a Randers metric with `S = 0` has `K = 0`.
pub fn k0_residuals(r: &RandersData, x: &[f64], y: &[f64]) -> Result<K0Residuals> {
    let n = x.len();
    let t = beta_table(r, x)?;
    let c = t.contract(y);
    let alpha_curvature = riemann(&RiemannianSpray::new(r.alpha.clone()), x, y)?.matrix;
    let a2 = c.alpha * c.alpha;
    // s^i_j s^j_k and s_j s^j_k
    let ss = |i: usize, k: usize| (0..n).map(|j| t.s_up[i][j] * t.s_up[j][k]).sum::<f64>();
    let ss0 = |i: usize| (0..n).map(|j| t.s_up[i][j] * c.s_up_0[j]).sum::<f64>();
    let s_s0: f64 = (0..n).map(|j| t.s_low[j] * c.s_up_0[j]).sum();
    let s_sk = |k: usize| (0..n).map(|j| t.s_low[j] * t.s_up[j][k]).sum::<f64>();
    let mut residual_a = vec![vec![0.0; n]; n];
    let mut residual_b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let d = delta(i, k);
            let x_ik = (c.s_cov_00 * d - c.s_cov_0k[k] * y[i])
                + (c.s_cov_k0[k] - c.s_cov_0k[k]) * y[i]
                + c.s0 * (c.s0 * d - t.s_low[k] * y[i])
                - (a2 * ss(i, k) - ss0(i) * c.y_low[k])
                + 3.0 * c.s_k0[k] * c.s_up_0[i];
            residual_a[i][k] = alpha_curvature[i][k] + x_ik;
            residual_b[i][k] = s_s0 * (a2 * d - c.y_low[k] * y[i])
                + a2 * (s_s0 * d - s_sk(k) * y[i])
                + a2 * (c.s_up_cov_k0[i][k] - c.s_up_cov_0k[i][k])
                - (a2 * c.s_up_cov_0k[i][k] - c.s_up_cov_00[i] * c.y_low[k]);
        }
    }
    let s_zero_residual = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (t.r[i][j] + t.b[i] * t.s_low[j] + t.b[j] * t.s_low[i]).abs())
        .fold(0.0, f64::max);
    Ok(K0Residuals {
        residual_a,
        residual_b,
        alpha_curvature,
        s_zero_residual,
    })
}

/// Traced curvature of an `S = 0` Randers metric and the two conditions
/// for it to vanish.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RandersRicci {
    pub ricci: f64,
    /// `s^k_{0|k} - (n-1) s_j s^j_0`
    pub linear_condition: f64,
    /// `Ric_alpha + (n-1)(s_{0|0} + s_0^2) - alpha^2 s^k_j s^j_k + 2 s_k0 s^k_0`
    pub quadratic_condition: f64,
}

pub fn randers_ricci_trace(r: &RandersData, x: &[f64], y: &[f64]) -> Result<RandersRicci> {
    let n = x.len();
    let t = beta_table(r, x)?;
    let c = t.contract(y);
    let ric_alpha = riemann(&RiemannianSpray::new(r.alpha.clone()), x, y)?.ricci;
    let m = (n - 1) as f64;
    let s_s0: f64 = dot(&t.s_low, &c.s_up_0);
    let trace_cov: f64 = (0..n).map(|k| c.s_up_cov_0k[k][k]).sum();
    let linear_condition = trace_cov - m * s_s0;
    let quadratic_condition = ric_alpha + m * (c.s_cov_00 + c.s0 * c.s0)
        - c.alpha * c.alpha * t.s_up_trace_sq()
        + 2.0 * dot(&c.s_k0, &c.s_up_0);
    Ok(RandersRicci {
        ricci: quadratic_condition + 2.0 * linear_condition * c.alpha,
        linear_condition,
        quadratic_condition,
    })
}

/// Gauss curvature of a two-dimensional Riemannian metric.
pub fn gauss_curvature_riemannian(alpha: Arc<dyn crate::metrics::RiemannianField>, x: &[f64]) -> Result<f64> {
    if alpha.domain().dim != 2 {
        return Err(FinslerError::Dimension {
            expected: 2,
            got: alpha.domain().dim,
        });
    }
    let a = alpha.coeffs(x);
    let y = [1.0, 0.0];
    let ric = riemann(&RiemannianSpray::new(alpha), x, &y)?.ricci;
    Ok(ric / a[0][0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Euclidean;

    #[test]
    fn flat_curvature_vanishes() {
        let e: Arc<dyn FinslerMetric> = Arc::new(Euclidean::new(2));
        let s = spray_for(e.clone());
        let (x, y) = ([0.3, 0.1], [1.0, 2.0]);
        assert_eq!(riemann(s.as_ref(), &x, &y).unwrap().max_abs(), 0.0);
        assert_eq!(ricci_2d(s.as_ref(), &x, &y).unwrap().ricci, 0.0);
        assert_eq!(flag_curvature(e, &x, &y, &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn parallel_flag_is_degenerate() {
        let e: Arc<dyn FinslerMetric> = Arc::new(Euclidean::new(2));
        let r = flag_curvature(e, &[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]);
        assert!(matches!(r, Err(FinslerError::DegenerateFlag)));
    }
}
