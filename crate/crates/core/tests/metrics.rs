mod common;

use common::{any_site, entry, rel, scaled, site, GALLERY};
use finsler::gallery::rotation2d_tables;
use finsler::metrics::{beta_norm, cartan_first, check, fundamental_tensor};
use finsler::spray::beta_table;
use proptest::prelude::*;

#[test]
fn every_entry_passes_the_metric_check() {
    for e in GALLERY.iter() {
        let c = check(e.metric.as_ref(), 100, 7).unwrap();
        assert!(c.homogeneity <= 1e-12, "{}: {c:?}", e.spec());
        assert!(c.euler <= 1e-10, "{}: {c:?}", e.spec());
        assert!(c.quadratic <= 1e-10, "{}: {c:?}", e.spec());
        assert!(c.min_eigenvalue > 0.0, "{}: {c:?}", e.spec());
    }
}

#[test]
fn rotation_beta_norm_matches_tables() {
    let r = entry("rotation2d").randers.clone().unwrap();
    let p = [0.3, 0.4];
    let t = rotation2d_tables(&p);
    let a = r.alpha.coeffs(&p);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let expect: f64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| inv[i][j] * t.b[i] * t.b[j])
        .sum();
    assert!((beta_norm(&r, &p).unwrap() - expect.sqrt()).abs() <= 1e-12);
    let table = beta_table(&r, &p).unwrap();
    assert!((table.beta_norm_sq() - expect).abs() <= 1e-12);
}

#[test]
fn funk_beta_vanishes_at_origin() {
    let r = entry("funk").randers.clone().unwrap();
    assert_eq!(beta_norm(&r, &[0.0, 0.0]).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fundamental_tensor_is_zero_homogeneous((i, seed) in any_site(), lambda in 0.1f64..10.0) {
        let e = &GALLERY[i];
        let p = site(e, seed);
        let g = fundamental_tensor(e.metric.as_ref(), &p.x, &p.y).unwrap().rows();
        let h = fundamental_tensor(e.metric.as_ref(), &p.x, &scaled(&p.y, lambda)).unwrap().rows();
        prop_assert!(common::mat_rel(&h, &g) <= 1e-10);
    }

    #[test]
    fn g_contracts_to_f_squared((i, seed) in any_site()) {
        let e = &GALLERY[i];
        let p = site(e, seed);
        let g = fundamental_tensor(e.metric.as_ref(), &p.x, &p.y).unwrap();
        let f = e.metric.eval(&p.x, &p.y);
        prop_assert!(rel(g.apply(&p.y, &p.y), f * f) <= 1e-10);
    }

    #[test]
    fn cartan_tensor_is_symmetric_and_annihilates_y((i, seed) in any_site(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let e = &GALLERY[i];
        let p = site(e, seed);
        let v = site(e, s2).u;
        let w = site(e, s3).u;
        let f = e.metric.as_ref();
        let c = |a: &[f64], b: &[f64], d: &[f64]| cartan_first(f, &p.x, &p.y, a, b, d).unwrap();
        let base = c(&p.u, &v, &w);
        for other in [c(&p.u, &w, &v), c(&v, &p.u, &w), c(&v, &w, &p.u), c(&w, &p.u, &v), c(&w, &v, &p.u)] {
            prop_assert!(rel(other, base) <= 1e-10);
        }
        prop_assert!(c(&p.u, &v, &p.y).abs() <= 1e-10);
    }

    #[test]
    fn randers_metric_is_alpha_plus_beta(k in 0usize..16, seed in any::<u64>()) {
        let es = common::randers();
        let e = es[k % es.len()];
        let r = e.randers.as_ref().unwrap();
        let p = site(e, seed);
        prop_assert_eq!(e.metric.eval(&p.x, &p.y), r.alpha_at(&p.x, &p.y) + r.beta_at(&p.x, &p.y));
        prop_assert!(beta_norm(r, &p.x).unwrap() < 1.0);
    }
}
