//! Per-profile pipeline and the report records it produces.

use std::collections::BTreeMap;

use anyhow::Result;
use capflow_core::conformal::{optimal_k_bd, transformed_inequality_bd, Transformed};
use capflow_core::functionals::{
    identity_check_with, monotone_series, monotonicity_violations, MonotoneRecord, Quantity,
};
use capflow_core::inequalities::{check_with, shield_conditions, BoundaryData, Status, Verdict};
use capflow_core::metric::{validate, ValidationReport};
use capflow_core::{Estimate, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Plan, Point};
use crate::output::Num;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Report,
    Monotone,
    VerifyIdentities,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Report => "report",
            Command::Monotone => "monotone",
            Command::VerifyIdentities => "verify-identities",
        }
    }
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema_version: u32,
    pub command: &'static str,
    pub name: Option<&'a str>,
    pub seed: u64,
    pub safety: Num,
    pub profiles: Vec<&'a ProfileReport>,
}

#[derive(Serialize)]
pub struct EstOut {
    pub value: Num,
    pub err: Num,
}

impl From<Estimate> for EstOut {
    fn from(e: Estimate) -> Self {
        Self {
            value: e.value.into(),
            err: e.err.into(),
        }
    }
}

#[derive(Serialize)]
pub struct WitnessOut {
    pub condition: &'static str,
    pub rho: Num,
    pub value: Num,
    pub interval: Option<[Num; 2]>,
}

#[derive(Serialize)]
pub struct ValidationOut {
    pub ok: bool,
    pub horizon_free: bool,
    pub nonnegative_scalar_curvature: bool,
    pub decay_ok: bool,
    pub derivative_consistent: bool,
    pub witnesses: Vec<WitnessOut>,
}

impl From<&ValidationReport> for ValidationOut {
    fn from(v: &ValidationReport) -> Self {
        Self {
            ok: v.ok(),
            horizon_free: v.horizon_free,
            nonnegative_scalar_curvature: v.nonnegative_scalar_curvature,
            decay_ok: v.decay_ok,
            derivative_consistent: v.derivative_consistent,
            witnesses: v
                .witnesses
                .iter()
                .map(|w| WitnessOut {
                    condition: w.condition.name(),
                    rho: w.rho.into(),
                    value: w.value.into(),
                    interval: w.interval.map(|(a, b)| [a.into(), b.into()]),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct VerdictOut {
    pub id: String,
    pub lhs: Num,
    pub rhs: Num,
    pub slack: Num,
    pub tolerance: Num,
    pub status: &'static str,
    pub note: Option<String>,
    pub mass: Num,
    pub capacity: Num,
    pub q: Num,
    pub willmore: Num,
}

impl From<&Verdict> for VerdictOut {
    fn from(v: &Verdict) -> Self {
        Self {
            id: v.id.clone(),
            lhs: v.lhs.into(),
            rhs: v.rhs.into(),
            slack: v.slack.into(),
            tolerance: v.tolerance.into(),
            status: v.status.name(),
            note: v.note.clone(),
            mass: v.context.mass.into(),
            capacity: v.context.capacity.into(),
            q: v.context.q.into(),
            willmore: v.context.willmore.into(),
        }
    }
}

#[derive(Serialize)]
pub struct IdentityOut {
    pub identity: &'static str,
    pub t1: Num,
    pub t2: Num,
    pub lhs: EstOut,
    pub rhs: EstOut,
    pub residual: Num,
    pub tolerance: Num,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct ShieldOut {
    pub inner: Num,
    pub outer: Num,
    pub h: Num,
    pub annulus_capacity: EstOut,
    pub boundary_energy: EstOut,
    pub distance: EstOut,
    pub volume: EstOut,
    pub by_capacity: bool,
    pub by_volume: bool,
    pub by_energy: bool,
    pub conclusion: Option<VerdictOut>,
}

#[derive(Serialize)]
pub struct OptimalKOut {
    pub k_star: Num,
    pub bound: Num,
    pub k_numeric: Num,
    pub agrees: bool,
    pub status: &'static str,
}

#[derive(Serialize)]
pub struct MonotoneOut {
    pub points: usize,
    /// Per quantity: true when no step went the wrong way.
    pub flags: BTreeMap<&'static str, bool>,
}

#[derive(Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub id: String,
    pub detail: String,
    pub rho: Option<Num>,
    pub t: Option<Num>,
    pub excess: Num,
    pub allowance: Num,
}

#[derive(Serialize)]
pub struct ProfileReport {
    pub index: usize,
    pub family: &'static str,
    pub label: String,
    pub params: BTreeMap<String, Num>,
    pub validation: ValidationOut,
    pub capacity: Option<EstOut>,
    pub verdicts: Vec<VerdictOut>,
    pub identities: Vec<IdentityOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub shield: Vec<ShieldOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_k: Option<OptimalKOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<MonotoneOut>,
    pub violations: Vec<Violation>,
    pub error: Option<String>,
}

pub struct Outcome {
    pub report: ProfileReport,
    pub monotone: Vec<MonotoneRecord>,
}

fn verdict_violation(v: &Verdict) -> Option<Violation> {
    (v.status == Status::Violated).then(|| Violation {
        kind: "verdict",
        id: v.id.clone(),
        detail: format!("lhs {:.16e} exceeds rhs {:.16e}", v.lhs, v.rhs),
        rho: None,
        t: None,
        excess: (-v.slack).into(),
        allowance: v.tolerance.into(),
    })
}

/// Levels for the local identities: explicit pairs or seeded random ones.
fn identity_pairs(plan: &Plan, index: usize) -> Vec<(f64, f64)> {
    if let Some(p) = &plan.identity_pairs {
        return p.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed.wrapping_add(index as u64));
    let mut out = Vec::with_capacity(plan.identity_samples);
    while out.len() < plan.identity_samples {
        let a: f64 = rng.gen_range(0.0..0.999);
        let b: f64 = rng.gen_range(0.0..0.999);
        if a != b {
            out.push((a.min(b), a.max(b)));
        }
    }
    out
}

pub fn run_point(plan: &Plan, point: &Point, cmd: Command) -> Outcome {
    let validation = validate(&point.profile);
    let mut report = ProfileReport {
        index: point.index,
        family: point.family.name(),
        label: point.profile.label().to_string(),
        params: point.params.iter().map(|(k, &v)| (k.clone(), Num(v))).collect(),
        validation: (&validation).into(),
        capacity: None,
        verdicts: Vec::new(),
        identities: Vec::new(),
        shield: Vec::new(),
        optimal_k: None,
        monotone: None,
        violations: Vec::new(),
        error: None,
    };
    for w in &validation.witnesses {
        report.violations.push(Violation {
            kind: "validation",
            id: w.condition.name().to_string(),
            detail: "profile fails validation".into(),
            rho: Some(w.rho.into()),
            t: None,
            excess: w.value.into(),
            allowance: 0.0.into(),
        });
    }
    let mut records = Vec::new();
    if let Err(e) = run_inner(plan, point, cmd, &mut report, &mut records) {
        report.error = Some(format!("{e:#}"));
    }
    Outcome {
        report,
        monotone: records,
    }
}

fn run_inner(
    plan: &Plan,
    point: &Point,
    cmd: Command,
    report: &mut ProfileReport,
    records: &mut Vec<MonotoneRecord>,
) -> Result<()> {
    let pot = Potential::new(&point.profile, plan.quad)?;
    report.capacity = Some(pot.capacity().into());
    let bd = BoundaryData::from_potential(&pot);

    if cmd == Command::Report {
        for &id in &plan.checks {
            let v = check_with(&pot, id, plan.safety)?;
            report.violations.extend(verdict_violation(&v));
            report.verdicts.push((&v).into());
        }
        for &k in &plan.conformal_k {
            for which in [Transformed::MassB, Transformed::BdryIneq] {
                let v = transformed_inequality_bd(&bd, which, k, plan.safety)?;
                report.violations.extend(verdict_violation(&v));
                report.verdicts.push((&v).into());
            }
        }
        let o = optimal_k_bd(&bd);
        if o.status == Status::Violated {
            report.violations.push(Violation {
                kind: "verdict",
                id: "optimal-k".into(),
                detail: format!("m/(2c) below the bound {:.16e}", o.bound),
                rho: None,
                t: None,
                excess: (o.bound - 0.5 * bd.q()).into(),
                allowance: 0.0.into(),
            });
        }
        report.optimal_k = Some(OptimalKOut {
            k_star: o.k_star.into(),
            bound: o.bound.into(),
            k_numeric: o.k_numeric.into(),
            agrees: o.agrees,
            status: o.status.name(),
        });
        for a in &plan.annuli {
            let s = if a.relative { pot.rho0() } else { 1.0 };
            let (inner, outer) = (a.inner * s, a.outer * s);
            let sh = shield_conditions(&pot, inner, outer)?;
            if let Some(v) = &sh.conclusion {
                if let Some(mut viol) = verdict_violation(v) {
                    viol.kind = "shield";
                    viol.detail = format!("annulus ({inner:.16e}, {outer:.16e}) hypothesis holds with mass <= 0");
                    report.violations.push(viol);
                }
            }
            report.shield.push(ShieldOut {
                inner: inner.into(),
                outer: outer.into(),
                h: sh.h.into(),
                annulus_capacity: sh.annulus.capacity.into(),
                boundary_energy: sh.annulus.boundary_energy.into(),
                distance: sh.annulus.distance.into(),
                volume: sh.annulus.volume.into(),
                by_capacity: sh.by_capacity,
                by_volume: sh.by_volume,
                by_energy: sh.by_energy,
                conclusion: sh.conclusion.as_ref().map(Into::into),
            });
        }
    }

    if matches!(cmd, Command::Report | Command::VerifyIdentities) {
        let pairs = identity_pairs(plan, point.index);
        for &id in &plan.identities {
            let levels: Vec<(f64, f64)> = if id.is_global() {
                vec![(0.0, 1.0)]
            } else {
                pairs.clone()
            };
            for (t1, t2) in levels {
                let r = identity_check_with(&pot, id, t1, t2, plan.safety)?;
                if !r.pass {
                    report.violations.push(Violation {
                        kind: "identity",
                        id: id.name().to_string(),
                        detail: format!("residual exceeds tolerance on ({t1}, {t2})"),
                        rho: None,
                        t: Some(r.t2.into()),
                        excess: r.residual.abs().into(),
                        allowance: r.tolerance.into(),
                    });
                }
                report.identities.push(IdentityOut {
                    identity: id.name(),
                    t1: r.t1.into(),
                    t2: r.t2.into(),
                    lhs: r.lhs.into(),
                    rhs: r.rhs.into(),
                    residual: r.residual.into(),
                    tolerance: r.tolerance.into(),
                    pass: r.pass,
                });
            }
        }
    }

    if cmd == Command::Monotone {
        *records = monotone_series(&pot, &plan.ts)?;
        let bad = monotonicity_violations(records);
        let mut flags: BTreeMap<&'static str, bool> = [
            Quantity::CalA,
            Quantity::CalB,
            Quantity::F,
            Quantity::Psi,
            Quantity::AleThreeB,
        ]
        .iter()
        .map(|q| (q.name(), true))
        .collect();
        for v in &bad {
            flags.insert(v.quantity.name(), false);
            report.violations.push(Violation {
                kind: "monotone",
                id: v.quantity.name().to_string(),
                detail: format!("wrong-way step ending at grid index {}", v.index),
                rho: Some(records[v.index].rho.into()),
                t: Some(v.t.into()),
                excess: v.excess.into(),
                allowance: v.allowance.into(),
            });
        }
        report.monotone = Some(MonotoneOut {
            points: records.len(),
            flags,
        });
    }
    Ok(())
}
