mod common;

use common::{any_site, rel, site, GALLERY};
use finsler::diffcore::{
    default_step, fd_oracle, jet_eval, local_step, FnField, JetRequest, MetricField, MultiIndex, SquaredMetricField,
};
use finsler::gallery::make;
use finsler::{ChartDomain, Jet};
use proptest::prelude::*;

#[test]
fn fd_second_derivative_of_squared_norm() {
    let field = FnField {
        domain: ChartDomain::whole(2),
        f: |_x: &[Jet], y: &[Jet]| y[0].clone() * y[0].clone() + y[1].clone() * y[1].clone(),
    };
    let req = JetRequest::new(&[0.2, -0.1], &[0.7, 0.3], &[0, 0], &[2, 0]);
    let fd = fd_oracle(&field, &req, 1e-3).unwrap();
    let idx = MultiIndex {
        x: vec![0, 0],
        y: vec![2, 0],
    };
    assert!((fd.get(&idx).unwrap() - 2.0).abs() <= 1e-8);
}

#[test]
fn slab_fourth_y_derivatives_match_fd() {
    let slab = make("slab:kappa=0.5").unwrap();
    let field = SquaredMetricField(slab.metric.as_ref());
    let t = std::f64::consts::FRAC_PI_3;
    let y = [t.cos(), t.sin()];
    for k in 0..=4u8 {
        let req = JetRequest::new(&[0.0, 0.0], &y, &[0, 0], &[k, 4 - k]);
        let jet = jet_eval(&field, &req).unwrap();
        let fd = fd_oracle(&field, &req, default_step(4)).unwrap();
        let idx = MultiIndex {
            x: vec![0, 0],
            y: vec![k, 4 - k],
        };
        let (a, b) = (jet.get(&idx).unwrap(), fd.get(&idx).unwrap());
        assert!((a - b).abs() <= 1e-5, "d^4 (k={k}): jet {a} fd {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jet_derivatives_commute_exactly((i, seed) in any_site(), a in 0usize..6, b in 0usize..6) {
        let e = &GALLERY[i];
        let n = e.dim();
        let (a, b) = (a % (2 * n), b % (2 * n));
        let p = site(e, seed);
        let (x, y) = Jet::seed_pair(&p.x, &p.y, 3);
        let f = e.metric.eval_jet(&x, &y);
        prop_assert_eq!(f.diff(a).diff(b).value(), f.diff(b).diff(a).value());
        prop_assert_eq!(f.partial_wrt(&[a, b, a]), f.partial_wrt(&[b, a, a]));
    }

    #[test]
    fn euler_identity((i, seed) in any_site()) {
        let e = &GALLERY[i];
        let p = site(e, seed);
        let (x, y) = Jet::seed_pair(&p.x, &p.y, 1);
        let n = e.dim();
        let f = e.metric.eval_jet(&x, &y);
        let euler: f64 = (0..n).map(|k| p.y[k] * f.partial_wrt(&[n + k])).sum();
        prop_assert!(rel(euler, f.value()) <= 1e-12);
    }

    #[test]
    fn jet_agrees_with_fd((i, seed) in any_site(), shape in proptest::collection::vec((0usize..8, any::<bool>()), 1..=3)) {
        let e = &GALLERY[i];
        let n = e.dim();
        let p = site(e, seed);
        // unit Euclidean length, the scale the default steps are tuned for
        let y = common::scaled(&p.y, 1.0 / p.y.iter().map(|v| v * v).sum::<f64>().sqrt());
        let (mut ox, mut oy) = (vec![0u8; n], vec![0u8; n]);
        for (k, in_x) in shape {
            if in_x && ox.iter().sum::<u8>() < 2 {
                ox[k % n] += 1;
            } else {
                oy[k % n] += 1;
            }
        }
        let order = ox.iter().chain(&oy).map(|&o| usize::from(o)).sum();
        let field = MetricField(e.metric.as_ref());
        let req = JetRequest::new(&p.x, &y, &ox, &oy);
        let jet = jet_eval(&field, &req).unwrap();
        let fd = fd_oracle(&field, &req, local_step(&field, &req, order)).unwrap();
        for (idx, v) in &jet.partials {
            prop_assert!(rel(fd.partials[idx], *v) <= 1e-5, "{} {:?}: jet {} fd {}", e.spec(), idx, v, fd.partials[idx]);
        }
    }
}
