mod common;

use std::sync::Arc;

use capflow_core::metric::{
    adm_mass, build_bump, build_spline, from_conformal_radial, log_grid, scalar_curvature, validate, Condition,
    ConformalRadialFactor,
};
use capflow_core::{Decay, Error, MassProfile};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn schwarzschild_builder() {
    let z = schw(0.0, 1.0);
    assert_eq!(z.lapse(1.0), 1.0);
    assert_eq!(z.lapse(17.0), 1.0);
    let h = schw(1.0, 2.0);
    assert_eq!(h.lapse(2.0), 0.0);
    assert!(h.horizon_boundary());
    assert_eq!(h.decay(), Decay::Exact);
    // rho = r k² with r = 1, k = 3/2.
    assert_eq!(schw_iso(1.0, 1.0).rho0(), 2.25);
    assert!(capflow_core::metric::build_schwarzschild(1.0, 1.9).is_err());
    assert!(capflow_core::metric::build_schwarzschild(-1.0, 1.9).is_err());
}

#[test]
fn polytail_builder() {
    let p = polytail(0.1, 1.0, 1.0);
    assert!((p.mass(2.0) - 0.05).abs() < 1e-16);
    assert!((scalar_curvature(&p, 1.0) - 0.4).abs() < 1e-15);
    let h = 1e-5;
    let fd = (p.mass(1.0 + h) - p.mass(1.0 - h)) / (2.0 * h);
    assert!((p.mass_prime(1.0) - fd).abs() < 1e-9);
    let z = polytail(0.0, 1.0, 1.0);
    let f = flat(1.0);
    for r in [1.0, 3.0, 1e4] {
        assert_eq!(z.mass(r), f.mass(r));
        assert_eq!(z.lapse(r), f.lapse(r));
    }
    assert!(capflow_core::metric::build_polytail(0.1, 0.5, 1.0).is_err());
    assert!(capflow_core::metric::build_polytail(0.5, 1.0, 1.0).is_err());
}

#[test]
fn vacuum_curvature_vanishes() {
    for p in [schw(1.0, 2.25), flat(1.0)] {
        for r in log_grid(p.rho0(), 32) {
            assert_eq!(scalar_curvature(&p, r), 0.0);
        }
    }
}

#[test]
fn adm_masses() {
    assert_eq!(adm_mass(&schw(1.0, 2.25)).unwrap(), 1.0);
    assert_eq!(adm_mass(&flat(5.0)).unwrap(), 0.0);
    assert!((adm_mass(&polytail(0.1, 2.0, 1.0)).unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn adm_mass_rejects_slow_tail() {
    let p = MassProfile::custom(
        "slow",
        1.0,
        Arc::new(|r: f64| 0.1 * (1.0 - r.powf(-0.01))),
        Arc::new(|r: f64| 0.001 * r.powf(-1.01)),
        None,
        0.1,
        Decay::Exponent(0.01),
    )
    .unwrap();
    assert!(adm_mass(&p).is_err());
}

#[test]
fn validation_examples() {
    assert!(validate(&schw(1.0, 2.0)).ok());
    assert!(validate(&polytail(0.4, 1.0, 1.0)).horizon_free);
    assert!(validate(&polytail(0.1, 1.0, 1.0)).ok());

    let osc = MassProfile::custom(
        "oscillating",
        1.0,
        Arc::new(|r: f64| 0.05 * (1.0 + r.sin())),
        Arc::new(|r: f64| 0.05 * r.cos()),
        None,
        0.05,
        Decay::Exponent(1.0),
    )
    .unwrap();
    let rep = validate(&osc);
    assert!(!rep.nonnegative_scalar_curvature);
    let w = rep
        .witnesses
        .iter()
        .find(|w| w.condition == Condition::NonnegativeScalarCurvature)
        .unwrap();
    assert!(osc.mass_prime(w.rho) < 0.0);
    let (a, b) = w.interval.unwrap();
    // The refined bracket sits on the first zero of cos at π/2.
    assert!(
        (a - std::f64::consts::FRAC_PI_2).abs() < 1e-8 && b - a < 1e-9,
        "{a} {b}"
    );
}

#[test]
fn validation_flags_horizon_and_bad_derivative() {
    let inside = MassProfile::custom(
        "inside",
        1.0,
        Arc::new(|r: f64| 0.3 * r.min(3.0)),
        Arc::new(|r: f64| if r < 3.0 { 0.3 } else { 0.0 }),
        None,
        0.9,
        Decay::Exponent(1.0),
    )
    .unwrap();
    let rep = validate(&inside);
    assert!(rep.horizon_free);

    let trapped = MassProfile::custom(
        "trapped",
        1.0,
        Arc::new(|r: f64| 0.49 + 2.0 * (1.0 - 1.0 / r)),
        Arc::new(|r: f64| 2.0 / (r * r)),
        None,
        2.49,
        Decay::Exponent(1.0),
    )
    .unwrap();
    let rep = validate(&trapped);
    assert!(!rep.horizon_free);
    assert_eq!(rep.first_witness().unwrap().condition, Condition::HorizonFree);

    let wrong = MassProfile::custom(
        "wrong-derivative",
        1.0,
        Arc::new(|r: f64| 0.1 * (1.0 - 1.0 / r)),
        Arc::new(|r: f64| 0.2 / (r * r)),
        None,
        0.1,
        Decay::Exponent(1.0),
    )
    .unwrap();
    assert!(!validate(&wrong).derivative_consistent);
}

#[test]
fn spline_family_is_valid_and_seeded() {
    for seed in 0..12 {
        let p = build_spline(0.3, 1.0, 8, seed).unwrap();
        let rep = validate(&p);
        assert!(rep.ok(), "seed {seed}: {rep:?}");
        assert!(adm_mass(&p).is_ok());
    }
    let a = build_spline(0.3, 1.0, 8, 7).unwrap();
    let b = build_spline(0.3, 1.0, 8, 7).unwrap();
    for r in [1.0, 1.7, 10.0, 1e3] {
        assert_eq!(a.mass(r), b.mass(r));
    }
}

#[test]
fn bump_profile_valid() {
    let p = build_bump(0.1, 1.0, 0.002, 3.0, 0.5).unwrap();
    let rep = validate(&p);
    assert!(rep.ok(), "{rep:?}");
    let q = build_bump(0.1, 1.0, 0.3, 3.0, 0.5).unwrap();
    assert!(!validate(&q).nonnegative_scalar_curvature);
}

#[test]
fn conformal_flat_and_schwarzschild() {
    let f = from_conformal_radial(ConformalRadialFactor::poly(0.0, 0.0, 1.0)).unwrap();
    assert_eq!(f.rho0(), 1.0);
    assert_eq!(f.mass(5.0), 0.0);
    assert_eq!(f.m_adm(), 0.0);

    let s = from_conformal_radial(ConformalRadialFactor::schwarzschild(1.0, 1.0)).unwrap();
    assert!((s.rho0() - 2.25).abs() < 1e-15);
    for r in [2.25, 3.0, 10.0, 1e5] {
        assert!(rel(s.mass(r), 1.0) < 1e-12);
        assert!(s.mass_prime(r).abs() < 1e-12);
    }
    assert!(rel(s.m_adm(), 1.0) < 1e-12);
}

#[test]
fn conformal_round_trip_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let m: f64 = rng.gen_range(0.01..5.0);
        let r0 = m / 2.0 * rng.gen_range(1.001..20.0);
        let p = from_conformal_radial(ConformalRadialFactor::schwarzschild(m, r0)).unwrap();
        for rho in log_grid(p.rho0(), 17) {
            assert!(rel(p.mass(rho), m) < 1e-12, "m={m} r0={r0} rho={rho}");
        }
        assert!(rel(p.m_adm(), m) < 1e-12);
    }
}

#[test]
fn conformal_cross_term_profile_sign() {
    // φ = 1 + 1/(2r) + 0.01/r²: the oracle is a centred difference of the
    // Hawking mass in ρ.
    let fac = ConformalRadialFactor::poly(0.5, 0.01, 1.0);
    let p = from_conformal_radial(fac.clone()).unwrap();
    let grid = log_grid(p.rho0(), 64);
    let mut signs = Vec::new();
    for &rho in &grid[1..] {
        let h = 1e-4 * rho;
        let fd = (p.mass(rho + h) - p.mass(rho - h)) / (2.0 * h);
        let an = p.mass_prime(rho);
        assert!(
            (fd - an).abs() <= 1e-6 * an.abs().max(1e-12 * p.mass(rho) / rho) + 1e-13,
            "rho={rho}: {fd} vs {an}"
        );
        signs.push(an < 0.0);
    }
    let rep = validate(&p);
    let all_negative = signs.iter().all(|&s| s);
    assert!(all_negative);
    assert!(!rep.nonnegative_scalar_curvature);
}

#[test]
fn conformal_nonmonotone_radius_reported() {
    // φ = 1 + 4/r on r >= 1: ρ' = φ(φ + 2rφ') = φ(1 - 4/r) < 0 below r = 4.
    let err = from_conformal_radial(ConformalRadialFactor::poly(4.0, 0.0, 1.0)).unwrap_err();
    match err {
        Error::NonMonotoneRadius { r_lo, r_hi } => {
            assert_eq!(r_lo, 1.0);
            assert!((r_hi - 4.0).abs() < 1e-9, "{r_hi}");
        }
        e => panic!("unexpected {e:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curvature_sign_matches_slope(m in 0.0f64..0.45, p in 1.0f64..4.0, rho in 1.0f64..1e4) {
        let prof = polytail(m, p, 1.0);
        let r = scalar_curvature(&prof, rho);
        prop_assert_eq!(r >= 0.0, prof.mass_prime(rho) >= 0.0);
    }

    #[test]
    fn hawking_mass_is_profile_mass(m in 0.0f64..0.45, p in 1.0f64..4.0, rho in 1.0f64..1e6) {
        let prof = polytail(m, p, 1.0);
        let w = prof.lapse(rho);
        prop_assert!((0.5 * rho * (1.0 - w * w) - prof.mass(rho)).abs() <= 1e-15 * rho);
        prop_assert!((prof.hawking_mass(rho) - prof.mass(rho)).abs() <= 1e-15 * rho);
    }

    #[test]
    fn minimal_boundary_lapse_positive_outside(m in 0.01f64..10.0, x in 1e-9f64..1e3) {
        let prof = schw(m, 2.0 * m);
        prop_assert_eq!(prof.lapse(2.0 * m), 0.0);
        prop_assert!(prof.lapse(2.0 * m * (1.0 + x)) > 0.0);
    }
}
