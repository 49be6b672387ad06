//! Exact higher-order derivatives of chart fields and a finite-difference
//! oracle to check them against.

mod jet;
mod real;

use std::collections::BTreeMap;

pub use jet::{Jet, Layout};
pub use real::{bilinear, dot, mat_vec, Real};

use crate::domain::ChartDomain;
use crate::error::{FinslerError, Result};
use crate::metrics::FinslerMetric;

pub const MAX_ORDER_X: usize = 2;
pub const MAX_ORDER_Y: usize = 4;

/// A scalar field on chart x tangent space, evaluable on jets.
pub trait ChartField: Sync {
    fn domain(&self) -> &ChartDomain;
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Jet;

    fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval_jet(&Jet::lift(x), &Jet::lift(y)).value()
    }

    /// Whether the field is only defined for `y != 0`.
    fn slit(&self) -> bool {
        true
    }
}

/// `F` itself.
pub struct MetricField<'a>(pub &'a dyn FinslerMetric);

/// `F^2`.
pub struct SquaredMetricField<'a>(pub &'a dyn FinslerMetric);

impl ChartField for MetricField<'_> {
    fn domain(&self) -> &ChartDomain {
        self.0.domain()
    }
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.0.eval_jet(x, y)
    }
    fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.eval(x, y)
    }
}

impl ChartField for SquaredMetricField<'_> {
    fn domain(&self) -> &ChartDomain {
        self.0.domain()
    }
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.0.eval_jet(x, y).sq()
    }
    fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.eval(x, y).powi(2)
    }
}

/// Field given by a closure over jets, defined on the whole tangent space.
pub struct FnField<F> {
    pub domain: ChartDomain,
    pub f: F,
}

impl<F> ChartField for FnField<F>
where
    F: Fn(&[Jet], &[Jet]) -> Jet + Sync,
{
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (self.f)(x, y)
    }
    fn slit(&self) -> bool {
        false
    }
}

/// Multi-index over `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pub x: Vec<u8>,
    pub y: Vec<u8>,
}

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self {
            x: vec![0; n],
            y: vec![0; n],
        }
    }

    pub fn order_x(&self) -> usize {
        self.x.iter().map(|&e| e as usize).sum()
    }

    pub fn order_y(&self) -> usize {
        self.y.iter().map(|&e| e as usize).sum()
    }

    fn flat(&self) -> Vec<u8> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// Every multi-index bounded componentwise by `self`.
    pub fn dominated(&self) -> Vec<MultiIndex> {
        let flat = self.flat();
        let n = self.x.len();
        let mut out = vec![Vec::new()];
        for &e in &flat {
            out = out
                .into_iter()
                .flat_map(|p: Vec<u8>| {
                    (0..=e).map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|f| MultiIndex {
                x: f[..n].to_vec(),
                y: f[n..].to_vec(),
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct JetRequest {
    pub base_x: Vec<f64>,
    pub base_y: Vec<f64>,
    pub orders: MultiIndex,
}

impl JetRequest {
    pub fn new(base_x: &[f64], base_y: &[f64], orders_x: &[u8], orders_y: &[u8]) -> Self {
        Self {
            base_x: base_x.to_vec(),
            base_y: base_y.to_vec(),
            orders: MultiIndex {
                x: orders_x.to_vec(),
                y: orders_y.to_vec(),
            },
        }
    }

    fn validate(&self, field: &dyn ChartField) -> Result<()> {
        let n = field.domain().dim;
        for len in [
            self.base_x.len(),
            self.base_y.len(),
            self.orders.x.len(),
            self.orders.y.len(),
        ] {
            if len != n {
                return Err(FinslerError::Dimension {
                    expected: n,
                    got: len,
                });
            }
        }
        if self.orders.order_x() > MAX_ORDER_X {
            return Err(FinslerError::OrderCap(format!(
                "x-order {} > {MAX_ORDER_X}",
                self.orders.order_x()
            )));
        }
        if self.orders.order_y() > MAX_ORDER_Y {
            return Err(FinslerError::OrderCap(format!(
                "y-order {} > {MAX_ORDER_Y}",
                self.orders.order_y()
            )));
        }
        if field.slit() && self.base_y.iter().all(|&v| v == 0.0) {
            return Err(FinslerError::ZeroVector);
        }
        if !field.domain().contains(&self.base_x) {
            return Err(outside(field, &self.base_x));
        }
        Ok(())
    }
}

fn outside(field: &dyn ChartField, x: &[f64]) -> FinslerError {
    FinslerError::OutsideDomain {
        x: x.to_vec(),
        domain: field.domain().name.clone(),
    }
}

/// Value and mixed partials of a field at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub partials: BTreeMap<MultiIndex, f64>,
}

impl JetValue {
    pub fn get(&self, idx: &MultiIndex) -> Option<f64> {
        self.partials.get(idx).copied()
    }
}

/// Exact partials of `field` for every multi-index dominated by the request.
///
/// Only the variables that are actually differentiated are seeded, so the
/// jet dimension stays small.
pub fn jet_eval(field: &dyn ChartField, req: &JetRequest) -> Result<JetValue> {
    req.validate(field)?;
    let n = req.base_x.len();
    let flat = req.orders.flat();
    let active: Vec<usize> = (0..2 * n).filter(|&k| flat[k] > 0).collect();
    let order: usize = flat.iter().map(|&e| e as usize).sum();
    let base: Vec<f64> = req.base_x.iter().chain(&req.base_y).copied().collect();

    let mut vars = Jet::lift(&base);
    if !active.is_empty() {
        let layout = Layout::get(active.len(), order);
        for (slot, &k) in active.iter().enumerate() {
            vars[k] = Jet::variable(&layout, slot, base[k]);
        }
    }
    let out = field.eval_jet(&vars[..n], &vars[n..]);
    if !out.value().is_finite() {
        return Err(FinslerError::NonFinite {
            x: req.base_x.clone(),
            y: req.base_y.clone(),
        });
    }

    let partials = req
        .orders
        .dominated()
        .into_iter()
        .map(|idx| {
            let f = idx.flat();
            let exps: Vec<u8> = active.iter().map(|&k| f[k]).collect();
            (idx, out.partial(&exps))
        })
        .collect();
    Ok(JetValue {
        value: out.value(),
        partials,
    })
}

/// Central-difference weights for the `k`-th derivative on offsets `-2..=2`.
fn stencil(k: u8) -> [f64; 5] {
    match k {
        0 => [0.0, 0.0, 1.0, 0.0, 0.0],
        1 => [0.0, -0.5, 0.0, 0.5, 0.0],
        2 => [0.0, 1.0, -2.0, 1.0, 0.0],
        3 => [-0.5, 1.0, 0.0, -1.0, 0.5],
        4 => [1.0, -4.0, 6.0, -4.0, 1.0],
        _ => unreachable!("order capped at 4"),
    }
}

/// Step giving roughly balanced truncation and cancellation error for an
/// O(1)-scaled field and derivative of total order `order`.
pub fn default_step(order: usize) -> f64 {
    match order {
        0 | 1 => 1e-4,
        2 => 1e-3,
        3 => 5e-3,
        _ => 1e-2,
    }
}

/// [`default_step`] shrunk to the local length scale: `|y|` and a tenth
/// of the distance from `x` to the domain boundary.
pub fn local_step(field: &dyn ChartField, req: &JetRequest, order: usize) -> f64 {
    let y_len = req.base_y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reach = 10.0 * field.domain().boundary_distance(&req.base_x);
    default_step(order) * y_len.min(reach).min(1.0)
}

fn central_difference(
    field: &dyn ChartField,
    base: &[f64],
    flat: &[u8],
    h: f64,
) -> Result<f64> {
    let n = base.len() / 2;
    let active: Vec<usize> = (0..base.len()).filter(|&k| flat[k] > 0).collect();
    let order: i32 = flat.iter().map(|&e| i32::from(e)).sum();
    if active.is_empty() {
        return Ok(field.eval_f64(&base[..n], &base[n..]));
    }
    let mut acc = 0.0;
    let mut offsets = vec![-2i32; active.len()];
    let mut point = base.to_vec();
    loop {
        let mut w = 1.0;
        for (slot, &k) in active.iter().enumerate() {
            w *= stencil(flat[k])[(offsets[slot] + 2) as usize];
        }
        if w != 0.0 {
            for (slot, &k) in active.iter().enumerate() {
                point[k] = base[k] + f64::from(offsets[slot]) * h;
            }
            if !field.domain().contains(&point[..n]) {
                return Err(outside(field, &point[..n]));
            }
            acc += w * field.eval_f64(&point[..n], &point[n..]);
        }
        // odometer over the active offsets
        let mut slot = 0;
        loop {
            if slot == active.len() {
                return Ok(acc / h.powi(order));
            }
            offsets[slot] += 1;
            if offsets[slot] <= 2 {
                break;
            }
            offsets[slot] = -2;
            slot += 1;
        }
    }
}

/// Finite-difference estimate of the same partials as [`jet_eval`]:
/// tensor-product central stencils with one Richardson level, so the
/// error is `O(step^4)` for smooth fields.
pub fn fd_oracle(field: &dyn ChartField, req: &JetRequest, step: f64) -> Result<JetValue> {
    req.validate(field)?;
    if step.is_nan() || step <= 0.0 {
        return Err(FinslerError::InvalidParameter(format!("step {step} must be > 0")));
    }
    let base: Vec<f64> = req.base_x.iter().chain(&req.base_y).copied().collect();
    let value = field.eval_f64(&req.base_x, &req.base_y);
    let mut partials = BTreeMap::new();
    for idx in req.orders.dominated() {
        let flat = idx.flat();
        let v = if flat.iter().all(|&e| e == 0) {
            value
        } else {
            let coarse = central_difference(field, &base, &flat, step)?;
            let fine = central_difference(field, &base, &flat, step / 2.0)?;
            (4.0 * fine - coarse) / 3.0
        };
        partials.insert(idx, v);
    }
    Ok(JetValue { value, partials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field<F: Fn(&[Jet], &[Jet]) -> Jet + Sync>(n: usize, f: F) -> FnField<F> {
        FnField {
            domain: ChartDomain::whole(n),
            f,
        }
    }

    #[test]
    fn quadratic_form_second_derivative() {
        let f = field(2, |_x, y| dot(y, y));
        let req = JetRequest::new(&[0.3, -0.1], &[1.0, 2.0], &[0, 0], &[2, 0]);
        let v = jet_eval(&f, &req).unwrap();
        let top = MultiIndex {
            x: vec![0, 0],
            y: vec![2, 0],
        };
        assert_eq!(v.get(&top), Some(2.0));
        let fd = fd_oracle(&f, &req, 1e-3).unwrap();
        assert!((fd.get(&top).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn mixed_polynomial_partial() {
        let f = field(2, |x, y| x[0].clone() * y[0].clone() * y[0].clone());
        let req = JetRequest::new(&[1.0, 0.0], &[3.0, 0.0], &[1, 0], &[1, 0]);
        let v = jet_eval(&f, &req).unwrap();
        let idx = MultiIndex {
            x: vec![1, 0],
            y: vec![1, 0],
        };
        assert_eq!(v.get(&idx), Some(6.0));
        assert_eq!(v.partials.len(), 4);
    }

    #[test]
    fn constant_field_has_zero_partials() {
        let f = field(2, |_x, _y| Jet::constant(3.5));
        let req = JetRequest::new(&[0.0, 0.0], &[1.0, 0.0], &[1, 1], &[2, 0]);
        for v in [jet_eval(&f, &req).unwrap(), fd_oracle(&f, &req, 1e-2).unwrap()] {
            for (idx, p) in &v.partials {
                let expect = if idx.order_x() + idx.order_y() == 0 { 3.5 } else { 0.0 };
                assert!((p - expect).abs() < 1e-12, "{idx:?}: {p}");
            }
        }
    }

    #[test]
    fn caps_and_zero_vector_rejected() {
        let f = MetricField(&crate::metrics::Euclidean::new(2));
        let over_y = JetRequest::new(&[0.0, 0.0], &[1.0, 0.0], &[0, 0], &[3, 2]);
        assert!(matches!(jet_eval(&f, &over_y), Err(FinslerError::OrderCap(_))));
        let over_x = JetRequest::new(&[0.0, 0.0], &[1.0, 0.0], &[2, 1], &[0, 0]);
        assert!(matches!(jet_eval(&f, &over_x), Err(FinslerError::OrderCap(_))));
        let zero = JetRequest::new(&[0.0, 0.0], &[0.0, 0.0], &[0, 0], &[1, 0]);
        assert!(matches!(jet_eval(&f, &zero), Err(FinslerError::ZeroVector)));
    }

    #[test]
    fn stencil_leaving_domain_is_reported() {
        let d = ChartDomain::unit_ball(2);
        let f = FnField {
            domain: d,
            f: |x: &[Jet], _y: &[Jet]| x[0].clone(),
        };
        let req = JetRequest::new(&[0.99995, 0.0], &[1.0, 0.0], &[1, 0], &[0, 0]);
        assert!(matches!(
            fd_oracle(&f, &req, 1e-4),
            Err(FinslerError::OutsideDomain { .. })
        ));
    }
}
