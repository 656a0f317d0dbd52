//! Acceptance gate. Prints one [PASS]/[FAIL] line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use capflow_core::functionals::{
    identity_check, limit_at_infinity, monotone_series, monotonicity_violations, t_grid, Identity, LimitOf, TSpacing,
};
use capflow_core::inequalities::{
    catalog, check, photon_sphere, shield_conditions, static_residual, BoundaryData, CheckId, RadialFunction, Status,
    DEFAULT_SAFETY, PHOTON_MH,
};
use capflow_core::metric::{build_bump, build_spline, validate};
use capflow_core::MassProfile;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure(rel(got, want) <= tol, || {
        format!("{what}: got {got:.17e}, want {want:.17e}, tol {tol:e}")
    })
}

fn timed(limit: Duration, what: &str, f: impl FnOnce() -> Result<(), String>) -> Result<Duration, String> {
    let start = Instant::now();
    f()?;
    let dt = start.elapsed();
    ensure(dt <= limit, || format!("{what} took {dt:?} > {limit:?}"))?;
    Ok(dt)
}

fn crit1() -> Outcome {
    let dt = timed(Duration::from_secs(5), "schwarzschild suite", || {
        for r in [0.5, 1.0, 2.0, 5.0] {
            let k = 1.0 + 1.0 / (2.0 * r);
            let bd = BoundaryData::from_potential(&pot(&schw_iso(1.0, r)));
            within(bd.c(), r + 0.5, 1e-9, &format!("capacity r={r}"))?;
            within(bd.q(), 2.0 * (1.0 - 1.0 / k), 1e-9, &format!("q r={r}"))?;
            within(
                bd.willmore().sqrt(),
                (2.0 / k - 1.0).abs(),
                1e-9,
                &format!("sqrt W r={r}"),
            )?;
            within(
                bd.gradu_sq() / (4.0 * PI),
                1.0 / (k * k),
                1e-9,
                &format!("energy r={r}"),
            )?;
        }
        Ok(())
    })?;
    Ok(format!("4 radii in {dt:?}"))
}

fn crit2() -> Outcome {
    let m = 1.0;
    let (r, mh) = photon_sphere(m).map_err(|e| e.to_string())?;
    within(mh, 2.0 / (3.0 * 3f64.sqrt()), 1e-10, "max mH")?;
    within(mh, PHOTON_MH, 1e-10, "photon constant")?;
    within(r, (1.0 + 3f64.sqrt() / 2.0) * m, 1e-10, "photon radius")?;
    Ok(format!("r={r:.12}, mH={mh:.12}"))
}

fn crit3() -> Outcome {
    let schw_ids = [
        CheckId::ImprovedBrayMiao,
        CheckId::HalfratioGradu,
        CheckId::RatioWillmore,
        CheckId::Quadratic,
    ];
    let flat_ids = [
        CheckId::BdryIneq(0.0),
        CheckId::MassA,
        CheckId::MassB,
        CheckId::Amo,
        CheckId::GraduWillmore,
        CheckId::NonnegMassgap,
    ];
    let mut n = 0;
    for m in [0.1, 0.5, 1.0, 2.0, 7.0] {
        // Mean-convex means isotropic radius above m/2; include a horizon.
        for f in [0.5, 0.5001, 0.6, 0.866, 1.0, 1.5, 3.0, 10.0, 100.0] {
            let pt = pot(&schw_iso(m, f * m));
            for id in schw_ids {
                let v = check(&pt, id).map_err(|e| e.to_string())?;
                ensure(v.status == Status::Equality && v.slack.abs() <= 1e-8, || {
                    format!("schwarzschild({m}, r={}) {id}: {v:?}", f * m)
                })?;
                n += 1;
            }
        }
    }
    for rho0 in [0.5, 1.0, 3.0, 40.0] {
        let pt = pot(&flat(rho0));
        for id in flat_ids {
            let v = check(&pt, id).map_err(|e| e.to_string())?;
            ensure(v.status == Status::Equality && v.slack.abs() <= 1e-8, || {
                format!("flat({rho0}) {id}: {v:?}")
            })?;
            n += 1;
        }
    }
    Ok(format!("{n} equality verdicts"))
}

fn crit4() -> Outcome {
    let profiles = [
        schw(1.0, 2.25),
        schw(1.0, 3.0),
        polytail(0.1, 1.0, 1.0),
        polytail(0.1, 2.0, 1.0),
    ];
    let mut worst = 0.0f64;
    for p in &profiles {
        timed(Duration::from_secs(10), p.label(), || {
            let pt = pot(p);
            // Independent capacity for the expected values.
            let c = capacity_oracle(p, 18);
            let q = p.m_adm() / c;
            for which in [LimitOf::CalA, LimitOf::CalB, LimitOf::F] {
                let l = limit_at_infinity(&pt, which).map_err(|e| e.to_string())?;
                let want = which.coefficient() * PI * q;
                worst = worst.max(rel(l.limit.value, want));
                within(l.limit.value, want, 1e-6, &format!("{} {which:?}", p.label()))?;
            }
            Ok(())
        })?;
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn nnsc_corpus() -> Vec<MassProfile> {
    let mut v = vec![
        flat(1.0),
        schw(1.0, 2.0),
        schw(1.0, 2.25),
        schw(0.3, 10.0),
        polytail(0.1, 1.0, 1.0),
        polytail(0.1, 2.0, 1.0),
        polytail(0.45, 1.0, 1.0),
        polytail(0.2, 3.0, 2.0),
        build_bump(0.1, 1.0, 0.002, 3.0, 0.5).unwrap(),
    ];
    for seed in 0..4 {
        v.push(build_spline(0.3, 1.0, 8, seed).unwrap());
    }
    v
}

fn crit5() -> Outcome {
    let corpus = nnsc_corpus();
    let ts = t_grid(64, TSpacing::Geometric);
    for p in &corpus {
        let report = validate(p);
        ensure(report.ok(), || {
            format!("{} is not a valid NNSC profile: {report:?}", p.label())
        })?;
        let recs = monotone_series(&pot(p), &ts).map_err(|e| e.to_string())?;
        let bad = monotonicity_violations(&recs);
        ensure(bad.is_empty(), || format!("{}: {:?}", p.label(), bad[0]))?;
    }
    Ok(format!("{} profiles, 0 violations", corpus.len()))
}

fn crit6() -> Outcome {
    let local = [
        Identity::DiffB,
        Identity::DiffA,
        Identity::DiffF,
        Identity::RegPsi,
        Identity::RegB,
        Identity::WeightedH,
    ];
    let profiles = [
        schw(1.0, 2.25),
        polytail(0.1, 1.0, 1.0),
        polytail(0.3, 2.0, 1.0),
        build_spline(0.3, 1.0, 8, 7).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut n = 0;
    for p in &profiles {
        let pt = pot(p);
        for _ in 0..5 {
            let a: f64 = rng.gen_range(0.0..0.999);
            let b: f64 = rng.gen_range(0.0..0.999);
            let (t1, t2) = (a.min(b), a.max(b));
            for id in local {
                let r = identity_check(&pt, id, t1, t2).map_err(|e| e.to_string())?;
                let combined = r.lhs.err + r.rhs.err;
                ensure(r.residual.abs() <= 10.0 * combined, || {
                    format!("{} {id} ({t1}, {t2}): {r:?}", p.label())
                })?;
                n += 1;
            }
        }
    }
    let pt = pot(&schw(1.0, 2.25));
    for id in [Identity::MIdentity, Identity::MIdentity2, Identity::Amo] {
        let r = identity_check(&pt, id, 0.0, 1.0).map_err(|e| e.to_string())?;
        ensure(r.residual.abs() <= 1e-6, || format!("{id}: {r:?}"))?;
        n += 1;
    }
    let r = identity_check(&pt, Identity::MIdentity, 0.0, 1.0).map_err(|e| e.to_string())?;
    within(r.lhs.value, 1.0 / 9.0, 1e-12, "M-identity lhs")?;
    Ok(format!("{n} identity residuals"))
}

fn crit7() -> Outcome {
    let p = polytail(0.1, 1.0, 1.0);
    let run = || catalog(&pot(&p), DEFAULT_SAFETY);
    let first = run();
    let second = run();
    for (a, b) in first.iter().zip(&second) {
        ensure(a.slack > 0.0 && a.status == Status::SatisfiedStrict, || {
            format!("{a:?}")
        })?;
        ensure((a.slack - b.slack).abs() <= 1e-10, || {
            format!("{}: {} vs {}", a.id, a.slack, b.slack)
        })?;
    }
    let min = first.iter().map(|v| v.slack).fold(f64::INFINITY, f64::min);
    Ok(format!("{} checks, min slack {min:.3e}", first.len()))
}

fn crit8() -> Outcome {
    let bad = build_bump(0.1, 1.0, 0.3, 3.0, 0.5).map_err(|e| e.to_string())?;
    let report = validate(&bad);
    ensure(!report.nonnegative_scalar_curvature, || {
        format!("validation passed: {report:?}")
    })?;
    let recs = monotone_series(&pot(&bad), &t_grid(256, TSpacing::Uniform)).map_err(|e| e.to_string())?;
    let viol = monotonicity_violations(&recs);
    ensure(!viol.is_empty(), || "no monotonicity violation".into())?;

    let s = schw(1.0, 2.25);
    let rs = static_residual(&pot(&s), &RadialFunction::lapse(&s)).map_err(|e| e.to_string())?;
    ensure(rs.max() <= 1e-10, || format!("schwarzschild static residual {rs:?}"))?;
    let p = polytail(0.1, 1.0, 1.0);
    let rp = static_residual(&pot(&p), &RadialFunction::lapse(&p)).map_err(|e| e.to_string())?;
    ensure(rp.max() >= 1e-3, || format!("polytail static residual {rp:?}"))?;
    Ok(format!(
        "{} violations; static residuals {:.1e} / {:.1e}",
        viol.len(),
        rs.max(),
        rp.max()
    ))
}

fn crit9() -> Outcome {
    let pt = pot(&schw(1.0, 2.0));
    let mut fired = 0;
    for (a, b) in [(2.0, 2.5), (2.0, 4.0), (2.0, 50.0), (2.5, 3.0), (3.0, 10.0), (5.0, 1e3)] {
        let s = shield_conditions(&pt, a, b).map_err(|e| e.to_string())?;
        if s.by_capacity || s.by_volume || s.by_energy {
            fired += 1;
            let v = s.conclusion.as_ref().ok_or("hypothesis true without conclusion")?;
            ensure(v.status == Status::SatisfiedStrict && v.rhs > 0.0, || {
                format!("({a}, {b}): {v:?}")
            })?;
        }
    }
    ensure(fired > 0, || "no annulus hypothesis held".into())?;

    let f = shield_conditions(&pot(&flat(1.0)), 1.0, 2.0).map_err(|e| e.to_string())?;
    ensure(!f.by_capacity && !f.by_energy && f.conclusion.is_none(), || {
        format!("{f:?}")
    })?;
    within(f.annulus.capacity.value, 2.0, 1e-12, "flat annulus capacity")?;
    within(
        f.annulus.boundary_energy.value,
        16.0 * PI,
        1e-12,
        "flat boundary energy",
    )?;
    Ok(format!("{fired} schwarzschild annuli fired"))
}

fn crit10() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md");
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let flat: String = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    for needle in [
        "positive mass theorem",
        "rigidity",
        "covered only by the radial property suites",
    ] {
        ensure(flat.contains(needle), || format!("README lacks '{needle}'"))?;
    }
    Ok("README scope statement present".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("schwarzschild closed forms", crit1),
        ("photon-sphere extremum", crit2),
        ("equality detection", crit3),
        ("limit formulas", crit4),
        ("monotonicity suite", crit5),
        ("identity residuals", crit6),
        ("strict-inequality regression", crit7),
        ("negative controls", crit8),
        ("shield conditions", crit9),
        ("scope of theorem-level claims", crit10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] criterion {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
