mod common;

use common::{any_site, entry, mat_rel, max_abs, rel, site, GALLERY};
use finsler::cli::verify::samples;
use finsler::curvature::{
    flag_curvature_with, gauss_curvature_riemannian, k0_residuals, ricci_2d, riemann, riemann_via_difference, spray_for,
};
use finsler::metrics::fundamental_tensor;
use finsler::spray::RiemannianSpray;
use finsler::FinslerError;
use proptest::prelude::*;

#[test]
fn rotation_alpha_gauss_curvature_values() {
    let alpha = entry("rotation2d").randers.clone().unwrap().alpha;
    assert!((gauss_curvature_riemannian(alpha.clone(), &[0.0, 0.0]).unwrap() + 5.0).abs() <= 1e-8);
    assert!((gauss_curvature_riemannian(alpha, &[0.3, 0.4]).unwrap() + 7.0).abs() <= 1e-8);
}

#[test]
fn k0_residuals_vanish_with_the_curvature() {
    for name in ["rotation2d", "cylinder"] {
        let e = entry(name);
        let r = e.randers.clone().unwrap();
        let spray = spray_for(e.metric.clone());
        for p in samples(e, 40, 11) {
            let res = k0_residuals(&r, &p.x, &p.y).unwrap();
            let curv = riemann(spray.as_ref(), &p.x, &p.y).unwrap();
            assert!(res.max_a() <= 1e-7 && res.max_b() <= 1e-7, "{name}: {} {}", res.max_a(), res.max_b());
            assert!(curv.max_abs() <= 1e-7, "{name}: {}", curv.max_abs());
        }
    }
}

fn skip_degenerate(r: finsler::Result<f64>) -> Result<f64, TestCaseError> {
    match r {
        Err(FinslerError::DegenerateFlag) => Err(TestCaseError::reject("degenerate flag")),
        other => Ok(other.unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn riemann_annihilates_y_and_is_self_adjoint((i, seed) in any_site()) {
        let e = &GALLERY[i];
        let p = site(e, seed);
        let spray = spray_for(e.metric.clone());
        let r = riemann(spray.as_ref(), &p.x, &p.y).unwrap();
        let scale = r.max_abs() + 1.0;
        prop_assert!(r.annihilation_residual() <= 1e-8 * scale);
        let g = fundamental_tensor(e.metric.as_ref(), &p.x, &p.y).unwrap();
        let low = r.lowered(&g);
        let n = p.x.len();
        for a in 0..n {
            for b in 0..n {
                prop_assert!((low[a][b] - low[b][a]).abs() <= 1e-8 * (max_abs(&low) + 1.0));
            }
        }
    }

    #[test]
    fn flag_curvature_depends_only_on_the_flag((i, seed) in any_site(), c in -3.0f64..3.0, lambda in prop_oneof![-4.0f64..-0.25, 0.25f64..4.0]) {
        let e = &GALLERY[i];
        let p = site(e, seed);
        let spray = spray_for(e.metric.clone());
        let f = e.metric.as_ref();
        let k = skip_degenerate(flag_curvature_with(f, spray.as_ref(), &p.x, &p.y, &p.u))?;
        let shifted: Vec<f64> = p.u.iter().zip(&p.y).map(|(u, y)| u + c * y).collect();
        let stretched = common::scaled(&p.u, lambda);
        let k1 = skip_degenerate(flag_curvature_with(f, spray.as_ref(), &p.x, &p.y, &shifted))?;
        let k2 = skip_degenerate(flag_curvature_with(f, spray.as_ref(), &p.x, &p.y, &stretched))?;
        prop_assert!(rel(k1, k) <= 1e-9, "{} vs {}", k1, k);
        prop_assert!(rel(k2, k) <= 1e-9, "{} vs {}", k2, k);
    }

    #[test]
    fn ricci_2d_matches_the_trace(k in 0usize..16, seed in any::<u64>()) {
        let planar: Vec<_> = GALLERY.iter().filter(|e| e.dim() == 2).collect();
        let e = planar[k % planar.len()];
        let p = site(e, seed);
        let spray = spray_for(e.metric.clone());
        let a = ricci_2d(spray.as_ref(), &p.x, &p.y).unwrap().ricci;
        let b = riemann(spray.as_ref(), &p.x, &p.y).unwrap().ricci;
        prop_assert!(rel(a, b) <= 1e-7);
    }

    #[test]
    fn difference_assembly_matches_direct_curvature(k in 0usize..16, seed in any::<u64>()) {
        let es = common::randers();
        let e = es[k % es.len()];
        let p = site(e, seed);
        let spray = spray_for(e.metric.clone());
        let reference = RiemannianSpray::new(e.randers.as_ref().unwrap().alpha.clone());
        let base = riemann(&reference, &p.x, &p.y).unwrap();
        let via = riemann_via_difference(spray.as_ref(), &reference, &base, &p.x, &p.y).unwrap();
        let direct = riemann(spray.as_ref(), &p.x, &p.y).unwrap();
        prop_assert!(mat_rel(&via.matrix, &direct.matrix) <= 1e-7);
    }
}
