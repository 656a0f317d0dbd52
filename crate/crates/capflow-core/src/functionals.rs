//! Level-set functionals A, B, 𝒜, ℬ, F, Ψ, their limits as t → 1 and the
//! integral identities that link boundary values to bulk integrals.
//!
//! With s = 1 - t and D = D(ρ_t) the radial closed forms are
//!   A = 8π (1 - w + D)/(1 + D),   B = 4π D (2 + D)/(1 + D)²,
//!   𝒜 = A/s,  ℬ = B/s,  F = 𝒜 - ℬ,  Ψ = s (3B - A),
//! all free of cancellation.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extrap::richardson;
use crate::metric::MassProfile;
use crate::potential::Potential;
use crate::quad::{Estimate, QuadratureSpec};

pub const DEFAULT_SAFETY: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneRecord {
    pub t: f64,
    pub rho: f64,
    pub a: Estimate,
    pub b: Estimate,
    pub cal_a: Estimate,
    pub cal_b: Estimate,
    pub f: Estimate,
    pub psi: Estimate,
}

/// Local data at one radius.
#[derive(Clone, Copy, Debug)]
struct Local {
    rho: f64,
    w: f64,
    omw: f64,
    d: f64,
    c: f64,
    mp: f64,
}

impl Local {
    fn new(pot: &Potential, rho: f64, d: f64) -> Self {
        let p = pot.profile();
        Self {
            rho,
            w: p.lapse(rho),
            omw: p.one_minus_lapse(rho),
            d,
            c: pot.capacity().value,
            mp: p.mass_prime(rho),
        }
    }

    fn with(&self, d: f64, c: f64) -> Self {
        Self { d, c, ..*self }
    }

    fn s(&self) -> f64 {
        self.c * (1.0 + self.d) / self.rho
    }

    /// [A, B, 𝒜, ℬ, F, Ψ].
    fn quantities(&self) -> [f64; 6] {
        let Local { rho, omw, d, c, .. } = *self;
        let e = 1.0 + d;
        let a = 8.0 * PI * (omw + d) / e;
        let b = 4.0 * PI * d * (2.0 + d) / (e * e);
        let cal_a = 8.0 * PI * rho * (omw + d) / (c * e * e);
        let cal_b = 4.0 * PI * rho * d * (2.0 + d) / (c * e * e * e);
        let f = 4.0 * PI * rho * (2.0 * omw * e + d * d) / (c * e * e * e);
        let psi = 4.0 * PI * c * self.gap_numerator() / (rho * e);
        [a, b, cal_a, cal_b, f, psi]
    }

    /// (1 + D)² (3B - A)/4π.
    fn gap_numerator(&self) -> f64 {
        self.d * self.d + 2.0 * self.d * (1.0 + self.w) - 2.0 * self.omw
    }

    fn three_b_minus_a(&self) -> f64 {
        4.0 * PI * self.gap_numerator() / (1.0 + self.d).powi(2)
    }

    /// (ρ/2)(H - 2|∇u|/(1 - u)).
    fn x(&self) -> f64 {
        (self.w * self.d - self.omw) / (1.0 + self.d)
    }

    /// ψ = 4πρ²[(3/4)(H - 2|∇u|/s)² + R/2] = 12π X² + 8π m'.
    fn psi_density(&self) -> f64 {
        let x = self.x();
        12.0 * PI * x * x + 8.0 * PI * self.mp
    }
}

fn rounding(v: f64) -> f64 {
    16.0 * f64::EPSILON * v.abs()
}

/// Evaluate `g` at (d, c) and attach the spread under the error bars of both.
fn propagate<const N: usize>(loc: &Local, d: Estimate, c: Estimate, g: impl Fn(&Local) -> [f64; N]) -> [Estimate; N] {
    let base = g(loc);
    let pd = g(&loc.with(d.value + d.err, c.value));
    let pc = g(&loc.with(d.value, c.value + c.err));
    let mut out = [Estimate::exact(0.0); N];
    for i in 0..N {
        let err = (pd[i] - base[i]).abs() + (pc[i] - base[i]).abs() + rounding(base[i]);
        out[i] = Estimate::new(base[i], err);
    }
    out
}

pub fn monotone_at_radius(pot: &Potential, rho: f64, t: f64) -> Result<MonotoneRecord> {
    let d = pot.tail(rho)?;
    let loc = Local::new(pot, rho, d.value);
    let [a, b, cal_a, cal_b, f, psi] = propagate(&loc, d, pot.capacity(), |l| l.quantities());
    Ok(MonotoneRecord {
        t,
        rho,
        a,
        b,
        cal_a,
        cal_b,
        f,
        psi,
    })
}

impl Potential {
    pub fn monotone_quantities(&self, t: f64) -> Result<MonotoneRecord> {
        let rho = self.level_radius(t)?;
        monotone_at_radius(self, rho, t)
    }

    pub fn psi_density(&self, t: f64) -> Result<f64> {
        let rho = self.level_radius(t)?;
        let d = self.tail(rho)?;
        Ok(Local::new(self, rho, d.value).psi_density())
    }
}

pub fn monotone_quantities(profile: &MassProfile, t: f64, q: &QuadratureSpec) -> Result<MonotoneRecord> {
    Potential::new(profile, *q)?.monotone_quantities(t)
}

pub fn psi_density(profile: &MassProfile, t: f64, q: &QuadratureSpec) -> Result<f64> {
    Potential::new(profile, *q)?.psi_density(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TSpacing {
    Uniform,
    /// 1 - t spaced geometrically from 1 down to 2^-20.
    Geometric,
}

/// `count` levels in [0, 1), starting at t = 0.
pub fn t_grid(count: usize, spacing: TSpacing) -> Vec<f64> {
    match spacing {
        TSpacing::Uniform => (0..count).map(|i| i as f64 / count as f64).collect(),
        TSpacing::Geometric => {
            let ln_min = -20.0 * std::f64::consts::LN_2;
            (0..count)
                .map(|i| {
                    let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
                    1.0 - (ln_min * frac).exp()
                })
                .collect()
        }
    }
}

pub fn monotone_series(pot: &Potential, ts: &[f64]) -> Result<Vec<MonotoneRecord>> {
    ts.iter().map(|&t| pot.monotone_quantities(t)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    CalA,
    CalB,
    F,
    Psi,
    /// The pointwise inequality A <= 3B.
    AleThreeB,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::CalA => "calA",
            Quantity::CalB => "calB",
            Quantity::F => "F",
            Quantity::Psi => "Psi",
            Quantity::AleThreeB => "A<=3B",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneViolation {
    pub quantity: Quantity,
    /// Index of the later grid point.
    pub index: usize,
    pub t: f64,
    /// Signed change in the wrong direction.
    pub excess: f64,
    pub allowance: f64,
}

/// Check 𝒜, ℬ, F nondecreasing and Ψ nonincreasing along a t-ordered series,
/// and A <= 3B pointwise, each up to the records' error bars.
pub fn monotonicity_violations(records: &[MonotoneRecord]) -> Vec<MonotoneViolation> {
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let gap = 3.0 * r.b.value - r.a.value;
        let allow = 3.0 * r.b.err + r.a.err;
        if gap < -allow {
            out.push(MonotoneViolation {
                quantity: Quantity::AleThreeB,
                index: i,
                t: r.t,
                excess: -gap,
                allowance: allow,
            });
        }
        if i == 0 {
            continue;
        }
        let prev = &records[i - 1];
        let pairs = [
            (Quantity::CalA, prev.cal_a, r.cal_a, 1.0),
            (Quantity::CalB, prev.cal_b, r.cal_b, 1.0),
            (Quantity::F, prev.f, r.f, 1.0),
            (Quantity::Psi, prev.psi, r.psi, -1.0),
        ];
        for (q, x0, x1, dir) in pairs {
            let drop = dir * (x0.value - x1.value);
            let allow = x0.err + x1.err;
            if drop > allow {
                out.push(MonotoneViolation {
                    quantity: q,
                    index: i,
                    t: r.t,
                    excess: drop,
                    allowance: allow,
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitOf {
    CalA,
    CalB,
    F,
}

impl LimitOf {
    /// The factor κ in lim = κ π 𝔪/𝔠.
    pub fn coefficient(&self) -> f64 {
        match self {
            LimitOf::CalA => 12.0,
            LimitOf::CalB => 4.0,
            LimitOf::F => 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitEstimate {
    pub which: LimitOf,
    pub limit: Estimate,
    pub order: f64,
    /// κ π 𝔪 / 𝔠 from the profile's mass and the computed capacity.
    pub expected: Estimate,
}

/// Extrapolate 𝒜, ℬ or F to t → 1 from t_j = 1 - 2^-j, j = 4..24.
pub fn limit_at_infinity(pot: &Potential, which: LimitOf) -> Result<LimitEstimate> {
    let mut vals = Vec::with_capacity(21);
    for j in 4..=24 {
        let t = 1.0 - 0.5f64.powi(j);
        let r = pot.monotone_quantities(t)?;
        vals.push(match which {
            LimitOf::CalA => r.cal_a.value,
            LimitOf::CalB => r.cal_b.value,
            LimitOf::F => r.f.value,
        });
    }
    let ex = richardson(&vals)?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(ex.limit.err <= 1e-3 * scale.max(f64::MIN_POSITIVE)) && scale > 0.0 {
        return Err(Error::Extrapolation(format!(
            "limit estimate {} has error {} relative to scale {scale}",
            ex.limit.value, ex.limit.err
        )));
    }
    let c = pot.capacity();
    let m = pot.profile().m_adm();
    let k = which.coefficient() * PI;
    let expected = Estimate::new(k * m / c.value, k * m.abs() / c.value * c.rel_err());
    Ok(LimitEstimate {
        which,
        limit: ex.limit,
        order: ex.order,
        expected,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Identity {
    DiffB,
    DiffA,
    DiffF,
    RegPsi,
    RegB,
    MIdentity,
    MIdentity2,
    Amo,
    WeightedH,
}

impl Identity {
    pub const ALL: [Identity; 9] = [
        Identity::DiffB,
        Identity::DiffA,
        Identity::DiffF,
        Identity::RegPsi,
        Identity::RegB,
        Identity::MIdentity,
        Identity::MIdentity2,
        Identity::Amo,
        Identity::WeightedH,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::DiffB => "diff-B",
            Identity::DiffA => "diff-A",
            Identity::DiffF => "diff-F",
            Identity::RegPsi => "reg-psi",
            Identity::RegB => "reg-B",
            Identity::MIdentity => "M-identity",
            Identity::MIdentity2 => "M-identity-2",
            Identity::Amo => "AMO",
            Identity::WeightedH => "weighted-H",
        }
    }

    /// Identities over the whole manifold ignore (t1, t2).
    pub fn is_global(&self) -> bool {
        matches!(self, Identity::MIdentity | Identity::MIdentity2 | Identity::Amo)
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Identity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        let alias = match key {
            "a" => "diff-B",
            "b" => "diff-A",
            "c" => "diff-F",
            "d" => "reg-psi",
            "e" => "reg-B",
            "f" => "M-identity",
            "g" => "M-identity-2",
            "h" => "AMO",
            "i" => "weighted-H",
            other => other,
        };
        Identity::ALL
            .iter()
            .copied()
            .find(|i| i.name().eq_ignore_ascii_case(alias))
            .ok_or_else(|| Error::Domain(format!("unknown identity '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResult {
    pub identity: Identity,
    pub t1: f64,
    pub t2: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Boundary-side value of an identity at one radius.
fn boundary_term(which: Identity, l: &Local) -> f64 {
    let Local { rho, w, d, c, .. } = *l;
    let e = 1.0 + d;
    match which {
        Identity::DiffB => l.quantities()[3],
        Identity::DiffA => l.quantities()[2],
        Identity::DiffF => l.quantities()[4],
        Identity::RegPsi => 4.0 * PI * c / (rho * e),
        Identity::RegB => 4.0 * PI * rho / (c * e * e * e),
        Identity::WeightedH => 8.0 * PI * w * rho / (c * e * e),
        _ => unreachable!("global identities have no per-radius boundary term"),
    }
}

/// Bulk integrand per unit ρ.
fn bulk_density(which: Identity, l: &Local) -> f64 {
    let Local { rho, w, d, c, mp, .. } = *l;
    let e = 1.0 + d;
    // s⁻² dt/dρ.
    let k = 1.0 / (c * e * e * w);
    let x = l.x();
    let hess = 3.0 * x * x + 2.0 * mp;
    let s = l.s();
    match which {
        Identity::DiffB => l.three_b_minus_a() * k,
        Identity::DiffA => (l.three_b_minus_a() + l.psi_density()) * k,
        Identity::DiffF => l.psi_density() * k,
        Identity::WeightedH => (16.0 * PI * w / e - 12.0 * PI * w * w - 8.0 * PI * mp + 4.0 * PI) * k,
        Identity::RegPsi => 4.0 * PI * c / (rho * rho * e) * (1.0 / (w * e) - 2.0),
        Identity::RegB => 4.0 * PI / c * (3.0 / (w * e.powi(4)) - 2.0 / e.powi(3)),
        Identity::MIdentity => {
            let weight = (1.0 - s) * (1.0 + s) / (s * s);
            c * weight * hess / (2.0 * rho * rho * w)
        }
        Identity::MIdentity2 => {
            let weight = 1.0 / (s * s) - 1.0 / 3.0;
            c * weight * hess / (2.0 * rho * rho * w)
        }
        Identity::Amo => 4.0 * PI * c * hess / (s * s * rho * rho * w),
    }
}

pub fn identity_check(pot: &Potential, which: Identity, t1: f64, t2: f64) -> Result<IdentityResult> {
    identity_check_with(pot, which, t1, t2, DEFAULT_SAFETY)
}

/// Evaluate both sides of one identity independently: the boundary side
/// from closed forms at the level radii, the bulk side by quadrature with a
/// fresh tail integral at every node.
pub fn identity_check_with(pot: &Potential, which: Identity, t1: f64, t2: f64, safety: f64) -> Result<IdentityResult> {
    let c = pot.capacity();
    let rho0 = pot.rho0();
    let bulk = |a: f64, b: f64| {
        pot.radial_integral(a, b, |rho, rel: &Cell<f64>| {
            let d = pot.tail_inner(rho)?;
            if d.value != 0.0 {
                rel.set(rel.get().max((d.err / d.value.abs()).min(1.0)));
            }
            Ok(bulk_density(which, &Local::new(pot, rho, d.value)))
        })
    };
    let (t1, t2, lhs, rhs) = if which.is_global() {
        let d0 = pot.boundary_tail();
        let loc = Local::new(pot, rho0, d0.value);
        let m = pot.profile().m_adm();
        let [lhs] = propagate(&loc, d0, c, |l| {
            let q = m / l.c;
            let e = 1.0 + l.d;
            // On Σ: (1/4π)∫|∇u|² = 1/(1+D0)², (1/8π)∫H|∇u| = w0/(1+D0).
            [match which {
                Identity::MIdentity => q - (1.0 - 1.0 / (e * e)),
                Identity::MIdentity2 => q - 2.0 / 3.0 * (1.0 - l.w / e),
                Identity::Amo => {
                    let qs = l.quantities();
                    8.0 * PI * q - (qs[0] - qs[1])
                }
                _ => unreachable!(),
            }]
        });
        (0.0, 1.0, lhs, bulk(rho0, f64::INFINITY)?)
    } else {
        if !(0.0 <= t1 && t1 < t2 && t2 < 1.0) {
            return Err(Error::Domain(format!(
                "identity needs 0 <= t1 < t2 < 1, got ({t1}, {t2})"
            )));
        }
        let r1 = pot.level_radius(t1)?;
        let r2 = pot.level_radius(t2)?;
        let d1 = pot.tail(r1)?;
        let d2 = pot.tail(r2)?;
        let [b1] = propagate(&Local::new(pot, r1, d1.value), d1, c, |l| [boundary_term(which, l)]);
        let [b2] = propagate(&Local::new(pot, r2, d2.value), d2, c, |l| [boundary_term(which, l)]);
        let lhs = Estimate::new(b2.value - b1.value, b1.err + b2.err);
        (t1, t2, lhs, bulk(r1, r2)?)
    };
    let residual = lhs.value - rhs.value;
    let scale = lhs.value.abs().max(rhs.value.abs());
    let tolerance = safety * (lhs.err + rhs.err) + 64.0 * f64::EPSILON * scale;
    Ok(IdentityResult {
        identity: which,
        t1,
        t2,
        lhs,
        rhs,
        residual,
        tolerance,
        pass: residual.abs() <= tolerance,
    })
}

/// |∇²u - Φ_u|² on the level sphere through ρ, computed from the Hessian
/// components (Christoffel symbols of the gauge) and from the closed form
/// (3/2)|∇u|²(H - 2|∇u|/(1-u))². Returns (components, closed form).
pub fn hessian_gap(pot: &Potential, rho: f64) -> Result<(f64, f64)> {
    let p = pot.profile();
    let c = pot.capacity().value;
    let s = pot.complement(rho)?.value;
    let w = p.lapse(rho);
    let wp = p.lapse_prime(rho);
    // u' and u'' in the coordinate ρ.
    let u1 = c / (rho * rho * w);
    let u2 = -2.0 * c / (rho * rho * rho * w) - c * wp / (rho * rho * w * w);
    let a = w * u1;
    // ∇²u(ν,ν) = w²(u'' + (w'/w) u'), ∇²u(e,e) = w² u'/ρ.
    let hnn = w * w * (u2 + wp / w * u1);
    let htt = w * w * u1 / rho;
    // Φ_u = (a²/s) g - 3 du⊗du / s.
    let phi_nn = a * a / s - 3.0 * a * a / s;
    let phi_tt = a * a / s;
    let from_components = (hnn - phi_nn).powi(2) + 2.0 * (htt - phi_tt).powi(2);
    let h = 2.0 * w / rho;
    let closed = 1.5 * a * a * (h - 2.0 * a / s).powi(2);
    Ok((from_components, closed))
}
