use std::f64::consts::PI;

use approx::assert_relative_eq;
use cheeger_core::*;

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

#[test]
fn eigenpair_export_round_trips() {
    let g = build_grid(&DomainSpec::unit_square(), 16).unwrap();
    let e = first_eigenpair(&g, exp(2.0), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let (mut field, mut meta) = (Vec::new(), Vec::new());
    e.export(&g, &mut field, &mut meta).unwrap();
    let back = ScalarField::read_columns(&g, field.as_slice()).unwrap();
    assert_eq!(back, e.field);
    let meta: EigenpairMeta = serde_json::from_slice(&meta).unwrap();
    assert_eq!(meta.resolution, 16);
    assert_eq!(meta.lambda, e.lambda);
}

#[test]
fn second_interval_eigenvalue_is_four_pi_squared() {
    let g = build_grid(&DomainSpec::unit_interval(), 512).unwrap();
    let s = spectrum_p2(&g, 2).unwrap();
    assert_relative_eq!(s.eigenvalues[1], 4.0 * PI * PI, max_relative = 1e-3);
}

#[test]
fn non_rectangular_domains_go_through_the_inscribed_box() {
    for spec in [DomainSpec::step(), DomainSpec::l_shape(), DomainSpec::dumbbell()] {
        let r = hk_upper_for_spec(&spec, 16, exp(2.0), 1, PerimeterMode::Dirichlet).unwrap();
        let ins = r.inscribed.as_ref().unwrap();
        assert!(ins.c2 >= 1.0);
        let g = build_grid(&spec, 16).unwrap();
        for (w, ratio) in r.witnesses.iter().zip(&r.witness_ratios) {
            assert_eq!(g.iso_ratio(w, PerimeterMode::Dirichlet), *ratio);
        }
        assert!(r.all_hold(), "{}: {:?}", spec.name, r.checks);
    }
}

#[test]
fn report_invariants_on_the_square() {
    let g = build_grid(&DomainSpec::unit_square(), 32).unwrap();
    for k in 1..=3 {
        let r = hk_upper(&g, exp(2.0), k, PerimeterMode::Dirichlet).unwrap();
        assert_eq!(r.witnesses.len(), k);
        for i in 0..k {
            for j in i + 1..k {
                assert!(r.witnesses[i].is_disjoint(&r.witnesses[j]));
            }
        }
        let worst = r
            .witnesses
            .iter()
            .map(|w| g.iso_ratio(w, PerimeterMode::Dirichlet))
            .fold(0.0, f64::max);
        assert_eq!(worst, r.h_k_upper);
        assert!(r.h_k_upper >= r.faber_krahn_lower.unwrap());
        assert!(r.all_hold(), "{:?}", r.checks);
    }
}

#[test]
fn comb_is_mode_sensitive() {
    let room = BoxRegion::new(vec![[0.0, 2.0], [0.0, 1.0]]);
    let r = counterexample_comb(4, &[0.25], &room, 16).unwrap();
    for row in &r.rows {
        assert_eq!(row.h_relative_upper, 1.0);
        assert!(row.h_dirichlet_upper >= 2.0 / 0.25);
    }
}

#[test]
fn relative_mode_interval_has_full_set_excluded() {
    // In relative mode the whole domain has no perimeter at all.
    let g = build_grid(&DomainSpec::unit_interval(), 8).unwrap();
    let full = CellSet::full(&g);
    assert_eq!(g.iso_ratio(&full, PerimeterMode::Relative), 0.0);
}

#[test]
fn bilateral_rejects_non_convex() {
    let err = verify_bilateral(&DomainSpec::dumbbell(), exp(2.0), &BilateralOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn p_to_one_runs_on_the_square() {
    let g = build_grid(&DomainSpec::unit_square(), 16).unwrap();
    let rep = p_to_one_sweep(&g, &[2.0, 1.5], PerimeterMode::Dirichlet).unwrap();
    assert_eq!(rep.h_1, 4.0);
    assert!(rep.monotone);
    assert!(rep.rows.iter().all(|r| r.holds == Some(true)));
}

#[test]
fn scheme_csv_lists_every_subinterval() {
    let g = build_grid(&DomainSpec::unit_interval(), 256).unwrap();
    let e = first_eigenpair(&g, exp(2.0), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let f = normalized(&g, &e.field, 2.0).unwrap();
    let scheme = build_scheme(&g, &f, exp(2.0), 1, &DecomposeOptions::default()).unwrap();
    let mut buf = Vec::new();
    scheme.write_csv(&mut buf).unwrap();
    let lines = String::from_utf8(buf).unwrap().lines().count();
    assert_eq!(lines, 1 + 12 * scheme.intervals.len());
}
