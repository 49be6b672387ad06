mod common;

use std::sync::Arc;

use common::{any_site, entry, max_abs, rel, scaled, site, GALLERY};
use finsler::curvature::spray_for;
use finsler::measures::{
    distortion, randers_s_curvature, rho_gradient, s_curvature, s_curvature_dynamic, s_zero_criterion, RandersDensity,
};
use finsler::metrics::{AffineOneForm, Euclidean};
use finsler::spray::beta_table;
use finsler::{ChartDomain, RandersData};
use proptest::prelude::*;

fn random_beta_on_disk(c: [f64; 2], eps: f64) -> RandersData {
    let disk = ChartDomain::unit_ball(2);
    let m = vec![vec![eps, 0.0], vec![0.0, eps]];
    RandersData::new(
        Arc::new(Euclidean::on(disk.clone())),
        Arc::new(AffineOneForm::new(c.to_vec(), m, disk)),
    )
}

#[test]
fn criterion_detects_nonzero_s() {
    let r = random_beta_on_disk([0.2, -0.1], 0.3);
    let x = [0.1, 0.2];
    assert!(max_abs(&s_zero_criterion(&r, &x).unwrap()) > 1e-3);
    assert!(randers_s_curvature(&r, &x, &[1.0, 0.0]).unwrap().abs() > 1e-3);
    let funk = entry("funk").randers.clone().unwrap();
    assert!(max_abs(&s_zero_criterion(&funk, &[0.3, 0.1]).unwrap()) > 1e-3);
}

#[test]
fn s_zero_metrics_have_s_i_equal_minus_rho_i() {
    for name in ["rotation2d", "cylinder"] {
        let e = entry(name);
        let r = e.randers.clone().unwrap();
        for p in finsler::cli::verify::samples(e, 40, 5) {
            assert!(max_abs(&s_zero_criterion(&r, &p.x).unwrap()) <= 1e-10);
            let t = beta_table(&r, &p.x).unwrap();
            let rho = rho_gradient(&r, &p.x).unwrap();
            for (s, g) in t.s_low.iter().zip(&rho.rho_i) {
                assert!((s + g).abs() <= 1e-9, "{name}: s_i {s} rho_i {g}");
            }
            for y in [p.y.clone(), p.u.clone()] {
                assert!(randers_s_curvature(&r, &p.x, &y).unwrap().abs() <= 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn s_is_one_homogeneous((i, seed) in any_site(), lambda in 0.1f64..10.0) {
        let e = &GALLERY[i];
        // entries without a differentiable density are skipped
        let Some(sigma) = e.density() else { return Ok(()) };
        let spray = spray_for(e.metric.clone());
        let p = site(e, seed);
        let s = s_curvature(spray.as_ref(), sigma.as_ref(), &p.x, &p.y).unwrap();
        let t = s_curvature(spray.as_ref(), sigma.as_ref(), &p.x, &scaled(&p.y, lambda)).unwrap();
        prop_assert!((t - lambda * s).abs() <= 1e-9 * (lambda * s).abs().max(1.0));
    }

    #[test]
    fn density_is_positive_and_distortion_zero_homogeneous((i, seed) in any_site(), lambda in 0.1f64..10.0) {
        let e = &GALLERY[i];
        // entries without a differentiable density are skipped
        let Some(sigma) = e.density() else { return Ok(()) };
        let p = site(e, seed);
        prop_assert!(sigma.sigma(&p.x).unwrap() > 0.0);
        let f = e.metric.as_ref();
        let a = distortion(f, sigma.as_ref(), &p.x, &p.y).unwrap();
        let b = distortion(f, sigma.as_ref(), &p.x, &scaled(&p.y, lambda)).unwrap();
        prop_assert!(rel(b, a) <= 1e-10);
    }

    #[test]
    fn s_routes_agree(k in 0usize..16, seed in any::<u64>()) {
        let es = common::randers();
        let e = es[k % es.len()];
        let r = e.randers.clone().unwrap();
        let density = RandersDensity(r.clone());
        let spray = spray_for(e.metric.clone());
        let p = site(e, seed);
        let closed = randers_s_curvature(&r, &p.x, &p.y).unwrap();
        let generic = s_curvature(spray.as_ref(), &density, &p.x, &p.y).unwrap();
        let dynamic = s_curvature_dynamic(e.metric.as_ref(), spray.as_ref(), &density, &p.x, &p.y, 1e-3).unwrap();
        prop_assert!(rel(generic, closed) <= 1e-6);
        prop_assert!(rel(dynamic, closed) <= 1e-6);
    }

    #[test]
    fn rho_gradient_matches_finite_differences(k in 0usize..16, seed in any::<u64>()) {
        let es = common::randers();
        let e = es[k % es.len()];
        let r = e.randers.clone().unwrap();
        let p = site(e, seed);
        let g = rho_gradient(&r, &p.x).unwrap();
        let h = 1e-5 * e.metric.domain().boundary_distance(&p.x).min(1.0);
        for i in 0..p.x.len() {
            let mut plus = p.x.clone();
            let mut minus = p.x.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (rho_gradient(&r, &plus).unwrap().rho - rho_gradient(&r, &minus).unwrap().rho) / (2.0 * h);
            prop_assert!(rel(fd, g.rho_i[i]) <= 1e-6, "{}: fd {} vs {}", e.spec(), fd, g.rho_i[i]);
        }
    }

    #[test]
    fn criterion_zero_iff_s_zero(c0 in -0.3f64..0.3, c1 in -0.3f64..0.3, eps in 0.05f64..0.4, x0 in -0.5f64..0.5, x1 in -0.5f64..0.5) {
        let r = random_beta_on_disk([c0, c1], eps);
        let x = [x0, x1];
        let crit = max_abs(&s_zero_criterion(&r, &x).unwrap());
        let s = [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]]
            .iter()
            .map(|y| randers_s_curvature(&r, &x, y).unwrap().abs())
            .fold(0.0, f64::max);
        prop_assert!(crit > 1e-3 && s > 1e-3, "criterion {} S {}", crit, s);
    }
}
