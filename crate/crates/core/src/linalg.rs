//! Small dense linear algebra over [`Real`] scalars.

use nalgebra::DMatrix;

use crate::diffcore::Real;

/// Gauss-Jordan inverse with partial pivoting on the constant terms.
/// Returns `None` when a pivot vanishes.
pub fn inverse<S: Real>(m: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n)
        .map(|i| (0..n).map(|j| S::cst(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|v| v.value().abs()))
        .fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap();
        let p = a[piv][col].value();
        if !p.is_finite() || p.abs() <= 1e-300 || p.abs() <= scale * 1e-15 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let pinv = a[col][col].recip();
        for j in 0..n {
            a[col][j] = a[col][j].clone() * pinv.clone();
            inv[col][j] = inv[col][j].clone() * pinv.clone();
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            for j in 0..n {
                a[row][j] = a[row][j].clone() - f.clone() * a[col][j].clone();
                inv[row][j] = inv[row][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<S: Real>(m: &[Vec<S>]) -> S {
    let n = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut det = S::cst(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap();
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        let p = a[col][col].clone();
        if p.value() == 0.0 {
            return S::zero();
        }
        det = det * p.clone();
        let pinv = p.recip();
        for row in col + 1..n {
            let f = a[row][col].clone() * pinv.clone();
            for j in col..n {
                a[row][j] = a[row][j].clone() - f.clone() * a[col][j].clone();
            }
        }
    }
    det
}

pub fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let n = m.len();
    let c = m.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, c, |i, j| m[i][j])
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Jet;

    #[test]
    fn inverse_of_spd() {
        let m = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let inv = inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!((determinant(&m) - to_dmatrix(&m).determinant()).abs() < 1e-12);
    }

    #[test]
    fn singular_is_rejected() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(inverse(&m).is_none());
    }

    #[test]
    fn jet_inverse_derivative_matches() {
        // d/dt (A + tB)^{-1} = -A^{-1} B A^{-1}
        let t = &Jet::seed(&[0.0], 1)[0];
        let a = [[2.0, 0.3], [0.3, 1.0]];
        let b = [[0.5, -0.1], [-0.1, 0.7]];
        let m: Vec<Vec<Jet>> = (0..2)
            .map(|i| (0..2).map(|j| t.clone() * b[i][j] + a[i][j]).collect())
            .collect();
        let inv = inverse(&m).unwrap();
        let a_inv = to_dmatrix(&[vec![2.0, 0.3], vec![0.3, 1.0]]).try_inverse().unwrap();
        let bm = to_dmatrix(&[vec![0.5, -0.1], vec![-0.1, 0.7]]);
        let expect = -(&a_inv * bm * &a_inv);
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i][j].partial(&[1]) - expect[(i, j)]).abs() < 1e-14);
            }
        }
    }
}
