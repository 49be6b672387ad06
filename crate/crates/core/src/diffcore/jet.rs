//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function of `nvars`
//! variables around a base point, truncated at a fixed total degree. Jets
//! are closed under the arithmetic and elementary functions in [`Real`], so
//! evaluating any generic expression on seeded jets yields all of its mixed
//! partials up to that degree, exact to rounding.
//!
//! Monomials are stored in graded order. The coefficient vector of an
//! order-`m` jet is therefore a prefix of the order-`N` vector for any
//! `N >= m`, and truncation is a slice.
//!
//! [`Real`]: super::Real

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, LazyLock, Mutex};

/// Monomial bookkeeping for a given `(nvars, order)`.
pub struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    mul: Vec<(u32, u32, u32)>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
    lower: Option<Arc<Layout>>,
}

static LAYOUTS: LazyLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

impl Layout {
    /// Shared layout for `nvars` variables truncated at total degree `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        let hit = LAYOUTS.lock().unwrap().get(&(nvars, order)).cloned();
        if let Some(layout) = hit {
            return layout;
        }
        let lower = (order > 0).then(|| Layout::get(nvars, order - 1));
        let built = Arc::new(Layout::build(nvars, order, lower));
        LAYOUTS
            .lock()
            .unwrap()
            .entry((nvars, order))
            .or_insert(built)
            .clone()
    }

    fn build(nvars: usize, order: usize, lower: Option<Arc<Layout>>) -> Layout {
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(exps.len());
            push_monomials(nvars, d, &mut vec![0; nvars], 0, &mut exps);
        }
        degree_start.push(exps.len());

        let index: HashMap<Vec<u8>, usize> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();

        let degree = |e: &[u8]| e.iter().map(|&v| v as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            let di = degree(ei);
            let j_end = degree_start[order - di + 1];
            for (j, ej) in exps[..j_end].iter().enumerate() {
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                mul.push((i as u32, j as u32, index[&sum] as u32));
            }
        }

        let deriv = (0..nvars)
            .map(|v| {
                exps.iter()
                    .enumerate()
                    .filter(|(_, e)| e[v] > 0)
                    .map(|(src, e)| {
                        let mut d = e.clone();
                        d[v] -= 1;
                        (src as u32, index[&d] as u32, e[v] as f64)
                    })
                    .collect()
            })
            .collect();

        Layout {
            nvars,
            order,
            exps,
            index,
            mul,
            deriv,
            lower,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    fn at_order(self: &Arc<Self>, order: usize) -> Arc<Layout> {
        let mut l = self.clone();
        while l.order > order {
            l = l.lower.clone().expect("lower layout");
        }
        l
    }
}

fn push_monomials(nvars: usize, remaining: usize, cur: &mut Vec<u8>, var: usize, out: &mut Vec<Vec<u8>>) {
    if var + 1 == nvars {
        cur[var] = remaining as u8;
        out.push(cur.clone());
        cur[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        push_monomials(nvars, remaining - k, cur, var + 1, out);
    }
    cur[var] = 0;
}

/// Truncated Taylor polynomial. A jet without a layout is a plain constant.
#[derive(Clone)]
pub struct Jet {
    layout: Option<Arc<Layout>>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.layout {
            None => write!(f, "Jet({})", self.coeffs[0]),
            Some(l) => write!(
                f,
                "Jet(nvars={}, order={}, value={}, ..)",
                l.nvars, l.order, self.coeffs[0]
            ),
        }
    }
}

impl Jet {
    pub fn constant(value: f64) -> Jet {
        Jet {
            layout: None,
            coeffs: vec![value],
        }
    }

    /// The coordinate function `var` expanded around `value`.
    pub fn variable(layout: &Arc<Layout>, var: usize, value: f64) -> Jet {
        assert!(var < layout.nvars, "variable index out of range");
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        if layout.order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[var] = 1;
            coeffs[layout.index[&e]] = 1.0;
        }
        Jet {
            layout: Some(layout.clone()),
            coeffs,
        }
    }

    /// One seeded variable per entry of `point`, truncated at `order`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        let layout = Layout::get(point.len(), order);
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(&layout, i, v))
            .collect()
    }

    /// Seeds `(x, y)` as variables `0..n` and `n..2n` of one layout.
    pub fn seed_pair(x: &[f64], y: &[f64], order: usize) -> (Vec<Jet>, Vec<Jet>) {
        let point: Vec<f64> = x.iter().chain(y).copied().collect();
        let mut all = Jet::seed(&point, order);
        let ys = all.split_off(x.len());
        (all, ys)
    }

    /// Constant terms are embedded without a layout.
    pub fn lift(values: &[f64]) -> Vec<Jet> {
        values.iter().map(|&v| Jet::constant(v)).collect()
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn order(&self) -> usize {
        self.layout.as_ref().map_or(0, |l| l.order)
    }

    pub fn is_constant(&self) -> bool {
        self.layout.is_none()
    }

    /// Taylor coefficient of the monomial with exponents `exps`.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        match &self.layout {
            None => {
                if exps.iter().all(|&e| e == 0) {
                    self.coeffs[0]
                } else {
                    0.0
                }
            }
            Some(l) => {
                debug_assert_eq!(exps.len(), l.nvars);
                l.index.get(exps).map_or(0.0, |&i| self.coeffs[i])
            }
        }
    }

    /// Mixed partial derivative with multi-index `exps`.
    pub fn partial(&self, exps: &[u8]) -> f64 {
        let total: usize = exps.iter().map(|&e| e as usize).sum();
        debug_assert!(
            total <= self.order() || self.is_constant(),
            "partial of degree {total} requested from order {} jet",
            self.order()
        );
        let fact: f64 = exps.iter().map(|&e| factorial(e as usize)).product();
        self.coeff(exps) * fact
    }

    /// Mixed partial with respect to the listed variables (repetition allowed).
    pub fn partial_wrt(&self, vars: &[usize]) -> f64 {
        let n = match &self.layout {
            None => return if vars.is_empty() { self.coeffs[0] } else { 0.0 },
            Some(l) => l.nvars,
        };
        let mut exps = vec![0u8; n];
        for &v in vars {
            exps[v] += 1;
        }
        self.partial(&exps)
    }

    /// Exact partial derivative in `var`; the result has one order less.
    pub fn diff(&self, var: usize) -> Jet {
        let Some(l) = &self.layout else {
            return Jet::constant(0.0);
        };
        let Some(lower) = &l.lower else {
            return Jet::constant(0.0);
        };
        let mut coeffs = vec![0.0; lower.len()];
        for &(src, dst, factor) in &l.deriv[var] {
            coeffs[dst as usize] += factor * self.coeffs[src as usize];
        }
        Jet {
            layout: Some(lower.clone()),
            coeffs,
        }
    }

    /// Drops every monomial of degree above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        match &self.layout {
            Some(l) if l.order > order => {
                let lay = l.at_order(order);
                Jet {
                    coeffs: self.coeffs[..lay.len()].to_vec(),
                    layout: Some(lay),
                }
            }
            _ => self.clone(),
        }
    }

    /// Applies a univariate function given its scaled derivatives
    /// `d[k] = f^(k)(a0) / k!` at the constant term `a0`.
    fn compose(&self, d: &[f64]) -> Jet {
        let Some(l) = &self.layout else {
            return Jet::constant(d[0]);
        };
        let order = l.order;
        if order == 0 {
            return Jet {
                layout: Some(l.clone()),
                coeffs: vec![d[0]],
            };
        }
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(d[order]);
        for k in (0..order).rev() {
            acc = &acc * &h;
            acc.add_scalar(d[k]);
        }
        // acc may still be a bare constant if h vanished identically
        if acc.layout.is_none() {
            let mut coeffs = vec![0.0; l.len()];
            coeffs[0] = acc.coeffs[0];
            return Jet {
                layout: Some(l.clone()),
                coeffs,
            };
        }
        acc
    }

    fn add_scalar(&mut self, v: f64) {
        self.coeffs[0] += v;
    }

    fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn taylor_order(&self) -> usize {
        self.order()
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let n = self.taylor_order();
        let mut d = Vec::with_capacity(n + 1);
        let inv = 1.0 / v;
        let mut term = inv;
        for _ in 0..=n {
            d.push(term);
            term *= -inv;
        }
        self.compose(&d)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let v = self.value();
        let n = self.taylor_order();
        let mut d = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            d.push(binom * v.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&d)
    }

    pub fn powi(&self, p: i32) -> Jet {
        let v = self.value();
        let n = self.taylor_order();
        let mut d = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            let e = p - k as i32;
            d.push(if binom == 0.0 { 0.0 } else { binom * v.powi(e) });
            binom *= (p as f64 - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn ln(&self) -> Jet {
        let v = self.value();
        let n = self.taylor_order();
        let mut d = vec![v.ln()];
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign / (k as f64 * v.powi(k as i32)));
        }
        self.compose(&d)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let n = self.taylor_order();
        let d: Vec<f64> = (0..=n).map(|k| e / factorial(k)).collect();
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let v = self.value();
        let n = self.taylor_order();
        let d: Vec<f64> = (0..=n)
            .map(|k| (v + k as f64 * std::f64::consts::FRAC_PI_2).sin() / factorial(k))
            .collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet {
        let v = self.value();
        let n = self.taylor_order();
        let d: Vec<f64> = (0..=n)
            .map(|k| (v + k as f64 * std::f64::consts::FRAC_PI_2).cos() / factorial(k))
            .collect();
        self.compose(&d)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn common_layout(a: &Jet, b: &Jet) -> Option<Arc<Layout>> {
    match (&a.layout, &b.layout) {
        (None, None) => None,
        (Some(l), None) | (None, Some(l)) => Some(l.clone()),
        (Some(la), Some(lb)) => {
            assert_eq!(la.nvars, lb.nvars, "jets over different variable sets");
            Some(if la.order <= lb.order { la.clone() } else { lb.clone() })
        }
    }
}

fn zip_add(a: &Jet, b: &Jet, sign: f64) -> Jet {
    let Some(l) = common_layout(a, b) else {
        return Jet::constant(a.coeffs[0] + sign * b.coeffs[0]);
    };
    let len = l.len();
    let mut coeffs = vec![0.0; len];
    for (c, v) in coeffs.iter_mut().zip(a.coeffs.iter().take(len)) {
        *c = *v;
    }
    for (c, v) in coeffs.iter_mut().zip(b.coeffs.iter().take(len)) {
        *c += sign * v;
    }
    Jet {
        layout: Some(l),
        coeffs,
    }
}

fn product(a: &Jet, b: &Jet) -> Jet {
    match (&a.layout, &b.layout) {
        (None, _) => b.scale(a.coeffs[0]),
        (_, None) => a.scale(b.coeffs[0]),
        _ => {
            let l = common_layout(a, b).unwrap();
            let mut coeffs = vec![0.0; l.len()];
            let (ac, bc) = (&a.coeffs, &b.coeffs);
            for &(i, j, k) in &l.mul {
                coeffs[k as usize] += ac[i as usize] * bc[j as usize];
            }
            Jet {
                layout: Some(l),
                coeffs,
            }
        }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        zip_add(self, rhs, 1.0)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        zip_add(self, rhs, -1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        product(self, rhs)
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        match &rhs.layout {
            None => self.scale(1.0 / rhs.coeffs[0]),
            Some(_) => product(self, &rhs.recip()),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet { (&self).$m(&Jet::constant(rhs)) }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&Jet::constant(self)).$m(&rhs) }
        }
    )*};
}

owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        (&self).neg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_prefix_layout() {
        let l3 = Layout::get(3, 3);
        let l2 = Layout::get(3, 2);
        assert_eq!(l3.len(), 20);
        assert_eq!(l2.len(), 10);
        assert_eq!(&l3.exps[..l2.len()], &l2.exps[..]);
    }

    #[test]
    fn polynomial_partials_are_exact() {
        // f = x0 * x1^2 at (1, 3): d/dx0 d/dx1 f = 2 x1 = 6
        let v = Jet::seed(&[1.0, 3.0], 3);
        let f = &v[0] * &(&v[1] * &v[1]);
        assert_eq!(f.partial_wrt(&[0, 1]), 6.0);
        assert_eq!(f.partial_wrt(&[1, 1]), 2.0);
        assert_eq!(f.partial_wrt(&[0, 1, 1]), 2.0);
        assert_eq!(f.value(), 9.0);
    }

    #[test]
    fn elementary_functions_match_closed_form_derivatives() {
        let t = Jet::seed(&[0.7], 4);
        let s = t[0].sqrt();
        // d^k/dt^k sqrt(t)
        let v: f64 = 0.7;
        let expect = [
            v.sqrt(),
            0.5 * v.powf(-0.5),
            -0.25 * v.powf(-1.5),
            0.375 * v.powf(-2.5),
            -0.9375 * v.powf(-3.5),
        ];
        for (k, e) in expect.iter().enumerate() {
            let got = s.partial(&[k as u8]);
            assert!((got - e).abs() < 1e-12 * e.abs().max(1.0), "k={k}: {got} vs {e}");
        }
        let l = t[0].ln();
        assert!((l.partial(&[3]) - 2.0 / v.powi(3)).abs() < 1e-12);
        let e = t[0].exp();
        assert!((e.partial(&[4]) - v.exp()).abs() < 1e-12);
        let r = t[0].recip();
        assert!((r.partial(&[2]) - 2.0 / v.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn diff_commutes_exactly() {
        let v = Jet::seed(&[0.3, -0.4, 1.1], 4);
        let f = (&(&v[0] * &v[1]) + &v[2].sqrt()).exp() / (&v[0] + &Jet::constant(2.0));
        let a = f.diff(0).diff(2).diff(1);
        let b = f.diff(1).diff(0).diff(2);
        assert_eq!(a.value(), b.value());
        assert_eq!(a.value(), f.partial_wrt(&[0, 1, 2]));
    }

    #[test]
    fn mixed_orders_truncate_to_lower() {
        let v = Jet::seed(&[2.0, 1.0], 3);
        let f = &v[0] * &v[0] * v[1].clone();
        let low = f.diff(0); // order 2
        let prod = &low * &f; // order 2
        assert_eq!(prod.order(), 2);
        assert!((prod.value() - 4.0 * 4.0).abs() < 1e-15);
    }
}
