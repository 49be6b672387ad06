mod common;

use std::sync::Arc;

use common::{entry, rel, scaled};
use finsler::gallery::{drift_field, riemannian_source};
use finsler::metrics::{Euclidean, FinslerMetric, RiemannianField};
use finsler::navigation::{
    indicatrix_shift_check, travel_time, volume_preservation_check, zermelo_general, zermelo_riemannian, ConstantDrift,
    DriftField, RadialDrift, RotationDrift, SampledPath,
};
use finsler::sampling::rng_for;
use finsler::{ChartDomain, RandersData};
use proptest::prelude::*;

fn disk() -> ChartDomain {
    ChartDomain::unit_ball(2)
}

fn euclid() -> Arc<dyn RiemannianField> {
    Arc::new(Euclidean::on(disk()))
}

/// Riemannian sources paired with drifts that stay below unit length.
fn pairs() -> Vec<(Arc<dyn RiemannianField>, Arc<dyn DriftField>)> {
    let poincare = riemannian_source("poincare:r=0.5").unwrap();
    let pd = poincare.domain().clone();
    vec![
        (euclid(), Arc::new(RotationDrift::new(1.0, disk()))),
        (euclid(), Arc::new(RadialDrift::new(1.0, disk()))),
        (euclid(), Arc::new(ConstantDrift::new(vec![0.3, -0.2], disk()))),
        (poincare.clone(), drift_field("rotation:c=0.5", &pd).unwrap()),
    ]
}

fn max_coeff_gap(a: &RandersData, b: &RandersData, x: &[f64]) -> f64 {
    let (aa, ab) = (a.alpha.coeffs(x), b.alpha.coeffs(x));
    let (ba, bb) = (a.beta.coeffs(x), b.beta.coeffs(x));
    let mut gap = ba.iter().zip(&bb).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    for (r, s) in aa.iter().zip(&ab) {
        gap = r.iter().zip(s).fold(gap, |m, (p, q)| m.max((p - q).abs() / q.abs().max(1.0)));
    }
    gap
}

#[test]
fn funk_and_rotation_are_navigation_data_of_euclid() {
    let funk = zermelo_riemannian(euclid(), Arc::new(RadialDrift::new(1.0, disk()))).unwrap();
    let rot = zermelo_riemannian(euclid(), Arc::new(RotationDrift::new(1.0, disk()))).unwrap();
    let funk_ref = entry("funk").randers.clone().unwrap();
    let rot_ref = entry("rotation2d").randers.clone().unwrap();
    for k in 0..100 {
        let x = disk().sample(&mut rng_for(3, k), 0.95);
        assert!(max_coeff_gap(&funk, &funk_ref, &x) <= 1e-12);
        assert!(max_coeff_gap(&rot, &rot_ref, &x) <= 1e-12);
    }
}

#[test]
fn zero_drift_leaves_the_metric_unchanged() {
    let nav = zermelo_riemannian(euclid(), Arc::new(ConstantDrift::zero(disk()))).unwrap();
    let x = [0.2, -0.3];
    assert_eq!(nav.beta.coeffs(&x), vec![0.0, 0.0]);
    assert_eq!(nav.alpha.coeffs(&x), euclid().coeffs(&x));
}

#[test]
fn euclidean_segment_takes_its_length() {
    let f = Euclidean::on(disk());
    let v = ConstantDrift::zero(disk());
    let path = SampledPath::from_fn(|t| vec![0.1 * t, -0.3 + 0.5 * t], |_| vec![0.1, 0.5], 0.0, 1.0, 5);
    let t = travel_time(&f, &v, &path, 16).unwrap();
    assert!((t - 0.26f64.sqrt()).abs() <= 1e-12);
}

#[test]
fn funk_rays_take_unbounded_time_to_reach_the_boundary() {
    // outward along a ray against the radial drift: dT/dr = 1 / (1 - r)
    let f = Euclidean::on(disk());
    let v = RadialDrift::new(1.0, disk());
    let mut last = 0.0;
    for r in [0.5, 0.9, 0.99, 0.999] {
        let path = SampledPath::from_fn(move |t| vec![r * t, 0.0], move |_| vec![r, 0.0], 0.0, 1.0, 400);
        let t = travel_time(&f, &v, &path, 64).unwrap();
        let exact = -(1.0 - r).ln();
        assert!((t - exact).abs() <= 1e-6 * exact, "r={r}: {t} vs {exact}");
        assert!(t > last);
        last = t;
    }
}

#[test]
fn unit_speed_paths_take_their_parameter_length() {
    // straight F~-unit-speed ray of the rotation navigation metric
    let f = Euclidean::on(disk());
    let v = RotationDrift::new(1.0, disk());
    let dir = [0.6, 0.8];
    let base = [-0.2, 0.1];
    let speed = |s: f64| {
        let x = [base[0] + s * dir[0], base[1] + s * dir[1]];
        zermelo_general(&f, &v, &x, &dir).unwrap()
    };
    // invert the arclength s(t) with dt/ds = F~(c(s), dir) by RK4
    let (n, total) = (400, 0.5);
    let (mut s, mut knots) = (0.0f64, vec![(0.0, 0.0)]);
    let h = total / n as f64;
    for k in 0..n {
        let g = |s: f64| 1.0 / speed(s);
        let k1 = g(s);
        let k2 = g(s + h / 2.0 * k1);
        let k3 = g(s + h / 2.0 * k2);
        let k4 = g(s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        knots.push(((k + 1) as f64 * h, s));
    }
    let path = SampledPath {
        t: knots.iter().map(|k| k.0).collect(),
        x: knots.iter().map(|k| vec![base[0] + k.1 * dir[0], base[1] + k.1 * dir[1]]).collect(),
        v: knots.iter().map(|k| scaled(&dir, 1.0 / speed(k.1))).collect(),
    };
    let t = travel_time(&f, &v, &path, 8).unwrap();
    assert!((t - total).abs() <= 1e-6, "{t}");
}

#[test]
fn volume_is_preserved_for_riemannian_sources() {
    for (alpha, v) in pairs() {
        let source = RandersData::riemannian(alpha.clone());
        let x = alpha.domain().sample(&mut rng_for(9, 0), 0.8);
        let check = volume_preservation_check(&source, v.as_ref(), &x, 400_000, 17).unwrap();
        assert!(check.pass(), "{check:?}");
        let (a, b) = check.closed_form.unwrap();
        assert!(rel(a, b) <= 1e-12, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_root_solve(k in 0usize..4, seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let (alpha, v) = pairs().swap_remove(k);
        let nav = zermelo_riemannian(alpha.clone(), v.clone()).unwrap();
        let source = RandersData::riemannian(alpha.clone());
        let mut rng = rng_for(seed, 0);
        let x = alpha.domain().sample(&mut rng, 0.95);
        let y = finsler::sampling::unit_vector(&mut rng, 2);
        prop_assert!(source.eval(&x, &scaled(&v.vector(&x), -1.0)) < 1.0);
        let closed = nav.eval(&x, &y);
        let solved = zermelo_general(&source, v.as_ref(), &x, &y).unwrap();
        prop_assert!(rel(solved, closed) <= 1e-10, "{} vs {}", solved, closed);
        let stretched = zermelo_general(&source, v.as_ref(), &x, &scaled(&y, lambda)).unwrap();
        prop_assert!((stretched - lambda * solved).abs() <= 1e-12 * (lambda * solved).max(1.0));
        prop_assert!(indicatrix_shift_check(&source, v.as_ref(), &x, 16, seed).unwrap() <= 1e-12);
    }

    #[test]
    fn zero_drift_root_solve_is_the_source(i in 0usize..16, seed in any::<u64>()) {
        let e = &common::GALLERY[i % common::GALLERY.len()];
        let p = common::site(e, seed);
        let zero = ConstantDrift::zero(e.metric.domain().clone());
        let solved = zermelo_general(e.metric.as_ref(), &zero, &p.x, &p.y).unwrap();
        prop_assert!(rel(solved, e.metric.eval(&p.x, &p.y)) <= 1e-12);
    }
}
