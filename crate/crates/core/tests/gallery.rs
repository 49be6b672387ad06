mod common;

use common::rel;
use finsler::cli::verify::samples;
use finsler::curvature::flag_curvature;
use finsler::gallery::{make, parse_spec, second_torsion_bound, slab_second_torsion, SReference, NAMES};
use finsler::metrics::{check, torsion_norms};
use proptest::prelude::*;

#[test]
fn slab_profile_reference_value() {
    assert!((slab_second_torsion(0.5, 0.0) + 0.75).abs() <= 1e-15);
}

#[test]
fn every_name_has_a_default() {
    for name in NAMES {
        let e = make(name).unwrap();
        assert_eq!(e.name, name);
        assert!(matches!(e.reference.s_curvature, Some(SReference::Zero | SReference::MultipleOfF(_)) | None));
    }
}

fn parameterized() -> impl Strategy<Value = String> {
    prop_oneof![
        (2usize..=4).prop_map(|n| format!("funk:n={n}")),
        (1usize..=4).prop_map(|n| format!("euclidean:n={n}")),
        (2usize..=3).prop_map(|n| format!("shen_flat:n={n}")),
        (0.0f64..=4.0).prop_map(|e| format!("minkowski:n=2,eps={e}")),
        (-0.9f64..0.9).prop_map(|e| format!("bao_shen_s3:eps={e}")),
        (0.0f64..0.95).prop_map(|k| format!("slab:kappa={k}")),
        Just("rotation2d".to_string()),
        Just("cylinder:n=3".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn specs_round_trip(spec in parameterized()) {
        let e = make(&spec).unwrap();
        let again = make(&e.spec()).unwrap();
        prop_assert_eq!(&again.spec(), &e.spec());
        let (name, params) = parse_spec(&e.spec()).unwrap();
        prop_assert_eq!(name, e.name.clone());
        prop_assert_eq!(params, e.params.clone());
    }

    #[test]
    fn entries_are_finsler_metrics(spec in parameterized(), seed in any::<u64>()) {
        let e = make(&spec).unwrap();
        let c = check(e.metric.as_ref(), 100, seed).unwrap();
        prop_assert!(c.homogeneity <= 1e-12 && c.euler <= 1e-10 && c.quadratic <= 1e-10, "{}: {:?}", spec, c);
        prop_assert!(c.min_eigenvalue > 0.0, "{}: {:?}", spec, c);
    }

    #[test]
    fn constant_curvature_references_hold(spec in parameterized(), seed in any::<u64>()) {
        let e = make(&spec).unwrap();
        let Some(k) = e.reference.flag_curvature.filter(|_| e.dim() >= 2) else { return Ok(()) };
        let tol = if e.name == "shen_flat" || e.name == "bao_shen_s3" { 1e-6 } else { 1e-7 };
        for p in samples(&e, 4, seed) {
            let got = flag_curvature(e.metric.clone(), &p.x, &p.y, &p.u).unwrap();
            prop_assert!(rel(got, k) <= tol, "{}: K = {} vs {}", spec, got, k);
        }
    }

    #[test]
    fn slab_torsion_stays_below_the_bound(kappa in 0.01f64..0.95) {
        let e = make(&format!("slab:kappa={kappa}")).unwrap();
        let (_, c2) = torsion_norms(e.metric.as_ref(), &[0.0, 0.0], 1, 1).unwrap();
        prop_assert!(c2 <= second_torsion_bound(kappa));
    }
}
