use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::jet::Jet;
use crate::metrics::{FinslerMetric, OneFormField, RiemannianField};
use crate::navigation::DriftField;

/// Scalar type that metric formulas are written against.
///
/// Implemented by `f64` (plain evaluation) and [`Jet`] (evaluation with
/// derivatives). The `eval_*` hooks let generic code call into trait
/// objects, which only expose the two concrete instantiations.
pub trait Real:
    Clone
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn ln(&self) -> Self;
    fn exp(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn powi(&self, p: i32) -> Self;
    fn recip(&self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn sq(&self) -> Self {
        self.clone() * self.clone()
    }

    fn eval_finsler(f: &dyn FinslerMetric, x: &[Self], y: &[Self]) -> Self;
    fn eval_riemannian(a: &dyn RiemannianField, x: &[Self]) -> Vec<Vec<Self>>;
    fn eval_one_form(b: &dyn OneFormField, x: &[Self]) -> Vec<Self>;
    fn eval_drift(v: &dyn DriftField, x: &[Self]) -> Vec<Self>;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn powi(&self, p: i32) -> Self {
        f64::powi(*self, p)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn eval_finsler(f: &dyn FinslerMetric, x: &[f64], y: &[f64]) -> f64 {
        f.eval(x, y)
    }
    fn eval_riemannian(a: &dyn RiemannianField, x: &[f64]) -> Vec<Vec<f64>> {
        a.coeffs(x)
    }
    fn eval_one_form(b: &dyn OneFormField, x: &[f64]) -> Vec<f64> {
        b.coeffs(x)
    }
    fn eval_drift(v: &dyn DriftField, x: &[f64]) -> Vec<f64> {
        v.vector(x)
    }
}

impl Real for Jet {
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn powf(&self, p: f64) -> Self {
        Jet::powf(self, p)
    }
    fn powi(&self, p: i32) -> Self {
        Jet::powi(self, p)
    }
    fn recip(&self) -> Self {
        Jet::recip(self)
    }
    fn eval_finsler(f: &dyn FinslerMetric, x: &[Jet], y: &[Jet]) -> Jet {
        f.eval_jet(x, y)
    }
    fn eval_riemannian(a: &dyn RiemannianField, x: &[Jet]) -> Vec<Vec<Jet>> {
        a.coeffs_jet(x)
    }
    fn eval_one_form(b: &dyn OneFormField, x: &[Jet]) -> Vec<Jet> {
        b.coeffs_jet(x)
    }
    fn eval_drift(v: &dyn DriftField, x: &[Jet]) -> Vec<Jet> {
        v.vector_jet(x)
    }
}

pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (p, q)| acc + p.clone() * q.clone())
}

/// `u^T m v`.
pub fn bilinear<S: Real>(m: &[Vec<S>], u: &[S], v: &[S]) -> S {
    let mut acc = S::zero();
    for (i, row) in m.iter().enumerate() {
        acc = acc + u[i].clone() * dot(row, v);
    }
    acc
}

pub fn mat_vec<S: Real>(m: &[Vec<S>], v: &[S]) -> Vec<S> {
    m.iter().map(|row| dot(row, v)).collect()
}
