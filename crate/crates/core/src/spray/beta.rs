//! Covariant derivatives of `beta` with respect to `alpha`.

use serde::Serialize;

use super::christoffel_jets;
use crate::diffcore::{bilinear, dot, mat_vec, Jet};
use crate::error::{FinslerError, Result};
use crate::linalg;
use crate::metrics::RandersData;

/// Tensors of `b_i` at a point. Index conventions: `b_cov[i][j] = b_{i|j}`,
/// `s_up[i][j] = s^i_j`, `s_cov[j][k] = s_{j|k}`,
/// `s_up_cov[i][j][k] = s^i_{j|k}`, `gamma[i][j][k] = Gamma^i_jk`.
#[derive(Clone, Debug, Serialize)]
pub struct BetaTable {
    pub x: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub a_inv: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<Vec<f64>>>,
    pub b: Vec<f64>,
    pub b_up: Vec<f64>,
    pub b_cov: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub s_up: Vec<Vec<f64>>,
    pub s_low: Vec<f64>,
    pub s_cov: Vec<Vec<f64>>,
    pub s_up_cov: Vec<Vec<Vec<f64>>>,
}

/// Contractions of a [`BetaTable`] with a tangent vector `y`; a `0` in a
/// name stands for the contracted slot.
#[derive(Clone, Debug, Serialize)]
pub struct BetaContractions {
    pub alpha: f64,
    pub beta: f64,
    /// `y_k = a_kj y^j`
    pub y_low: Vec<f64>,
    pub r00: f64,
    pub s0: f64,
    /// `s_k0 = s_kj y^j`
    pub s_k0: Vec<f64>,
    /// `s^i_0`
    pub s_up_0: Vec<f64>,
    /// `s_{0|0}`
    pub s_cov_00: f64,
    /// `s_{0|k}`
    pub s_cov_0k: Vec<f64>,
    /// `s_{k|0}`
    pub s_cov_k0: Vec<f64>,
    /// `s^i_{k|0}` as `[i][k]`
    pub s_up_cov_k0: Vec<Vec<f64>>,
    /// `s^i_{0|k}` as `[i][k]`
    pub s_up_cov_0k: Vec<Vec<f64>>,
    /// `s^i_{0|0}`
    pub s_up_cov_00: Vec<f64>,
}

fn values2(m: &[Vec<Jet>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(Jet::value).collect()).collect()
}

fn sum<F: Fn(usize) -> Jet>(n: usize, f: F) -> Jet {
    (0..n).fold(Jet::constant(0.0), |acc, k| acc + f(k))
}

pub fn beta_table(r: &RandersData, x: &[f64]) -> Result<BetaTable> {
    if !r.alpha.domain().contains(x) {
        return Err(FinslerError::OutsideDomain {
            x: x.to_vec(),
            domain: r.alpha.domain().name.clone(),
        });
    }
    let n = x.len();
    let xs = Jet::seed(x, 2);
    let a = r.alpha.coeffs_jet(&xs);
    let b = r.beta.coeffs_jet(&xs);
    let singular = || FinslerError::Singular { x: x.to_vec() };
    let gamma = christoffel_jets(&a, |j, k| j.diff(k)).ok_or_else(singular)?;
    let ainv = linalg::inverse(&a).ok_or_else(singular)?;

    let cov: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| b[i].diff(j) - sum(n, |l| b[l].clone() * gamma[l][i][j].clone()))
                .collect()
        })
        .collect();
    let s: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| (cov[i][j].clone() - cov[j][i].clone()) * 0.5).collect())
        .collect();
    let s_up: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| sum(n, |p| ainv[i][p].clone() * s[p][j].clone())).collect())
        .collect();
    let s_low: Vec<Jet> = (0..n).map(|j| sum(n, |i| b[i].clone() * s_up[i][j].clone())).collect();

    let s_cov: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let corr: f64 = (0..n).map(|l| s_low[l].value() * gamma[l][j][k].value()).sum();
                    s_low[j].diff(k).value() - corr
                })
                .collect()
        })
        .collect();
    let s_up_cov: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            let plus: f64 =
                                (0..n).map(|l| s_up[l][j].value() * gamma[i][l][k].value()).sum();
                            let minus: f64 =
                                (0..n).map(|l| s_up[i][l].value() * gamma[l][j][k].value()).sum();
                            s_up[i][j].diff(k).value() + plus - minus
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let b_cov = values2(&cov);
    let a_inv = values2(&ainv);
    let bv: Vec<f64> = b.iter().map(Jet::value).collect();
    Ok(BetaTable {
        x: x.to_vec(),
        a: values2(&a),
        b_up: mat_vec(&a_inv, &bv),
        a_inv,
        gamma: gamma.iter().map(|m| values2(m)).collect(),
        b: bv,
        r: (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (b_cov[i][j] + b_cov[j][i])).collect())
            .collect(),
        s: values2(&s),
        b_cov,
        s_up: values2(&s_up),
        s_low: s_low.iter().map(Jet::value).collect(),
        s_cov,
        s_up_cov,
    })
}

impl BetaTable {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `|beta|_alpha^2`
    pub fn beta_norm_sq(&self) -> f64 {
        dot(&self.b, &self.b_up)
    }

    /// `s^k_j s^j_k`
    pub fn s_up_trace_sq(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .flat_map(|k| (0..n).map(move |j| (j, k)))
            .map(|(j, k)| self.s_up[k][j] * self.s_up[j][k])
            .sum()
    }

    pub fn contract(&self, y: &[f64]) -> BetaContractions {
        let n = self.dim();
        let y_low = mat_vec(&self.a, y);
        let alpha = dot(y, &y_low).sqrt();
        let s_cov_0k: Vec<f64> =
            (0..n).map(|k| (0..n).map(|p| self.s_cov[p][k] * y[p]).sum()).collect();
        let s_cov_k0 = mat_vec(&self.s_cov, y);
        let s_up_cov_k0: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| dot(&self.s_up_cov[i][k], y)).collect())
            .collect();
        let s_up_cov_0k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| (0..n).map(|p| self.s_up_cov[i][p][k] * y[p]).sum()).collect())
            .collect();
        let s_up_cov_00 = s_up_cov_k0.iter().map(|row| dot(row, y)).collect();
        BetaContractions {
            alpha,
            beta: dot(&self.b, y),
            r00: bilinear(&self.r, y, y),
            s0: dot(&self.s_low, y),
            s_k0: mat_vec(&self.s, y),
            s_up_0: mat_vec(&self.s_up, y),
            s_cov_00: dot(&s_cov_k0, y),
            s_cov_0k,
            s_cov_k0,
            s_up_cov_k0,
            s_up_cov_0k,
            s_up_cov_00,
            y_low,
        }
    }
}
