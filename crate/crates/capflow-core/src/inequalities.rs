//! Catalog of boundary inequalities with verdicts, the mass-to-capacity
//! classification, shielding conditions and the static-potential residual.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metric::{log_grid, MassProfile, RadialFn};
use crate::potential::{AnnulusData, Potential};
use crate::quad::Estimate;
use crate::roots::{brent, golden_max};

pub const DEFAULT_SAFETY: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    SatisfiedStrict,
    Equality,
    Violated,
    PreconditionUnmet,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::SatisfiedStrict => "satisfied-strict",
            Status::Equality => "equality",
            Status::Violated => "violated",
            Status::PreconditionUnmet => "precondition-unmet",
        }
    }

    pub fn passed(&self) -> bool {
        !matches!(self, Status::Violated)
    }
}

/// 𝔪, 𝔠, q = 𝔪/𝔠 and W = (1/16π)∫H² of the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Context {
    pub mass: f64,
    pub capacity: f64,
    pub q: f64,
    pub willmore: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs; nonnegative means the inequality holds.
    pub slack: f64,
    pub tolerance: f64,
    pub status: Status,
    pub context: Context,
    pub note: Option<String>,
}

pub fn classify(slack: f64, tolerance: f64) -> Status {
    if slack.abs() <= tolerance {
        Status::Equality
    } else if slack > 0.0 {
        Status::SatisfiedStrict
    } else {
        Status::Violated
    }
}

/// Boundary data of Σ. Only the capacity carries quadrature error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryData {
    pub mass: f64,
    pub capacity: Estimate,
    pub rho0: f64,
    pub w0: f64,
    pub mean_curvature: f64,
}

impl BoundaryData {
    pub fn from_potential(pot: &Potential) -> Self {
        let p = pot.profile();
        let rho0 = p.rho0();
        Self {
            mass: p.m_adm(),
            capacity: pot.capacity(),
            rho0,
            w0: p.lapse(rho0),
            mean_curvature: p.mean_curvature(rho0),
        }
    }

    fn with_capacity(&self, c: f64) -> Self {
        Self {
            capacity: Estimate::new(c, self.capacity.err),
            ..*self
        }
    }

    pub fn c(&self) -> f64 {
        self.capacity.value
    }

    pub fn q(&self) -> f64 {
        self.mass / self.c()
    }

    /// q <= 1 up to the capacity error bar, so that horizon boundaries with
    /// q = 1 exactly are not rejected on rounding.
    pub fn q_at_most_one(&self, safety: f64) -> bool {
        let q = self.q();
        q <= 1.0 + safety * q.abs() * self.capacity.rel_err() + 1e3 * f64::EPSILON
    }

    /// W = (1/16π)∫H² = w0².
    pub fn willmore(&self) -> f64 {
        self.w0 * self.w0
    }

    /// ∫_Σ |∇u|² = 4π𝔠²/ρ0².
    pub fn gradu_sq(&self) -> f64 {
        4.0 * PI * self.c() * self.c() / (self.rho0 * self.rho0)
    }

    /// ∫_Σ H|∇u| = 8π𝔠 w0/ρ0.
    pub fn h_gradu(&self) -> f64 {
        8.0 * PI * self.c() * self.w0 / self.rho0
    }

    pub fn context(&self) -> Context {
        Context {
            mass: self.mass,
            capacity: self.c(),
            q: self.q(),
            willmore: self.willmore(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckId {
    BdryIneq(f64),
    MassA,
    MassB,
    Amo,
    GraduWillmore,
    /// Scan over k when None.
    FamilyK(Option<f64>),
    ImprovedBrayMiao,
    CapacityRadius,
    HalfratioGradu,
    RatioWillmore,
    Quadratic,
    Willmore16Pi,
    MassUpper,
    GraduLower,
    NonnegMassgap,
}

impl CheckId {
    pub fn catalog() -> Vec<CheckId> {
        vec![
            CheckId::BdryIneq(0.0),
            CheckId::MassA,
            CheckId::MassB,
            CheckId::Amo,
            CheckId::GraduWillmore,
            CheckId::FamilyK(None),
            CheckId::ImprovedBrayMiao,
            CheckId::CapacityRadius,
            CheckId::HalfratioGradu,
            CheckId::RatioWillmore,
            CheckId::Quadratic,
            CheckId::Willmore16Pi,
            CheckId::MassUpper,
            CheckId::GraduLower,
            CheckId::NonnegMassgap,
        ]
    }

    pub fn number(&self) -> u32 {
        match self {
            CheckId::BdryIneq(_) => 1,
            CheckId::MassA => 2,
            CheckId::MassB => 3,
            CheckId::Amo => 4,
            CheckId::GraduWillmore => 5,
            CheckId::FamilyK(_) => 6,
            CheckId::ImprovedBrayMiao => 7,
            CheckId::CapacityRadius => 8,
            CheckId::HalfratioGradu => 9,
            CheckId::RatioWillmore => 10,
            CheckId::Quadratic => 11,
            CheckId::Willmore16Pi => 12,
            CheckId::MassUpper => 13,
            CheckId::GraduLower => 14,
            CheckId::NonnegMassgap => 15,
        }
    }

    pub fn base_name(&self) -> &'static str {
        match self {
            CheckId::BdryIneq(_) => "bdry-ineq",
            CheckId::MassA => "mass-a",
            CheckId::MassB => "mass-b",
            CheckId::Amo => "amo",
            CheckId::GraduWillmore => "gradu-willmore",
            CheckId::FamilyK(_) => "family-k",
            CheckId::ImprovedBrayMiao => "improved-bray-miao",
            CheckId::CapacityRadius => "capacity-radius",
            CheckId::HalfratioGradu => "halfratio-gradu",
            CheckId::RatioWillmore => "ratio-willmore",
            CheckId::Quadratic => "quadratic",
            CheckId::Willmore16Pi => "willmore-16pi",
            CheckId::MassUpper => "mass-upper",
            CheckId::GraduLower => "gradu-lower",
            CheckId::NonnegMassgap => "nonneg-massgap",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckId::BdryIneq(t) if *t != 0.0 => write!(f, "bdry-ineq@{t}"),
            CheckId::FamilyK(Some(k)) => write!(f, "family-k@{k}"),
            other => f.write_str(other.base_name()),
        }
    }
}

/// Accepts names, catalog numbers, and `bdry-ineq@t` / `family-k@k`.
impl FromStr for CheckId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, arg) = match s.split_once('@') {
            Some((b, a)) => {
                let v: f64 = a
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad parameter in check id '{s}'")))?;
                (b, Some(v))
            }
            None => (s, None),
        };
        let found = CheckId::catalog()
            .into_iter()
            .find(|c| c.base_name() == base || c.number().to_string() == base)
            .ok_or_else(|| Error::Domain(format!("unknown check id '{s}'")))?;
        match (found, arg) {
            (CheckId::BdryIneq(_), Some(t)) => {
                if !(0.0..1.0).contains(&t) {
                    return Err(Error::Domain(format!("bdry-ineq level {t} outside [0, 1)")));
                }
                Ok(CheckId::BdryIneq(t))
            }
            (CheckId::FamilyK(_), Some(k)) => {
                if !(k > 0.0) {
                    return Err(Error::Domain(format!("family-k needs k > 0, got {k}")));
                }
                Ok(CheckId::FamilyK(Some(k)))
            }
            (c, None) => Ok(c),
            (c, Some(_)) => Err(Error::Domain(format!("check '{}' takes no parameter", c.base_name()))),
        }
    }
}

/// Build a verdict from an evaluator of (lhs, rhs) on boundary data, with the
/// tolerance set by how far the slack moves when 𝔠 moves by its error bar.
/// `unit` is the size of the largest term on either side and sets the
/// rounding floor.
pub(crate) fn verdict_from(
    id: String,
    bd: &BoundaryData,
    safety: f64,
    unit: f64,
    note: Option<String>,
    eval: impl Fn(&BoundaryData) -> (f64, f64),
) -> Verdict {
    let (lhs, rhs) = eval(bd);
    let slack = rhs - lhs;
    let c = bd.c();
    let dc = bd.capacity.err;
    let (l1, r1) = eval(&bd.with_capacity(c + dc));
    let (l2, r2) = eval(&bd.with_capacity(c - dc));
    let spread = ((r1 - l1) - slack).abs().max(((r2 - l2) - slack).abs());
    let tolerance = safety * spread + 1e3 * f64::EPSILON * lhs.abs().max(rhs.abs()).max(unit);
    Verdict {
        id,
        lhs,
        rhs,
        slack,
        tolerance,
        status: classify(slack, tolerance),
        context: bd.context(),
        note,
    }
}

fn unmet(id: String, bd: &BoundaryData, why: &str) -> Verdict {
    Verdict {
        id,
        lhs: f64::NAN,
        rhs: f64::NAN,
        slack: f64::NAN,
        tolerance: 0.0,
        status: Status::PreconditionUnmet,
        context: bd.context(),
        note: Some(why.to_string()),
    }
}

/// Q(k) = 4π + k∫H|∇u| - k(4 - k)∫|∇u|² = αk² + βk + 4π.
fn family_k_sides(bd: &BoundaryData, k: f64) -> (f64, f64) {
    (k * (4.0 - k) * bd.gradu_sq(), 4.0 * PI + k * bd.h_gradu())
}

/// Log grid of 64 points on [1e-2, 1e2].
pub fn k_grid() -> Vec<f64> {
    (0..64).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 63.0)).collect()
}

/// Stationary point -β/(2α) of Q.
pub fn family_k_stationary(bd: &BoundaryData) -> f64 {
    let alpha = bd.gradu_sq();
    let beta = bd.h_gradu() - 4.0 * alpha;
    -beta / (2.0 * alpha)
}

pub fn check_boundary(bd: &BoundaryData, id: CheckId, safety: f64) -> Verdict {
    let name = id.to_string();
    let q_ok = bd.q_at_most_one(safety);
    // Term sizes for the rounding floor.
    let unit = 1.0 + bd.q().abs();
    let pi_unit = 4.0 * PI * unit;
    let family_unit = |k: f64| 4.0 * PI * (1.0 + k * k) * unit;
    match id {
        CheckId::BdryIneq(t) => {
            debug_assert!(t == 0.0, "bdry-ineq at t > 0 needs the potential");
            verdict_from(name, bd, safety, pi_unit, None, |b| {
                (3.0 * b.gradu_sq(), 4.0 * PI + b.h_gradu())
            })
        }
        CheckId::MassA => verdict_from(name, bd, safety, pi_unit, None, |b| {
            (8.0 * PI - b.h_gradu(), 12.0 * PI * b.q())
        }),
        CheckId::MassB => verdict_from(name, bd, safety, pi_unit, None, |b| {
            (4.0 * PI - b.gradu_sq(), 4.0 * PI * b.q())
        }),
        CheckId::Amo => verdict_from(name, bd, safety, pi_unit, None, |b| {
            (4.0 * PI - b.h_gradu() + b.gradu_sq(), 8.0 * PI * b.q())
        }),
        CheckId::GraduWillmore => verdict_from(name, bd, safety, unit, None, |b| {
            let w = b.willmore();
            (
                b.gradu_sq() / (4.0 * PI),
                (2.0 * w + 2.0 * (w * w + 3.0 * w).sqrt() + 3.0) / 9.0,
            )
        }),
        CheckId::FamilyK(Some(k)) => verdict_from(name, bd, safety, family_unit(k), None, |b| family_k_sides(b, k)),
        CheckId::FamilyK(None) => {
            let mut ks = k_grid();
            let k0 = family_k_stationary(bd);
            if k0 > 0.0 && k0.is_finite() {
                ks.push(k0);
            }
            let worst = ks
                .into_iter()
                .map(|k| {
                    let (l, r) = family_k_sides(bd, k);
                    (k, r - l)
                })
                .fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            let k = worst.0;
            verdict_from(name, bd, safety, family_unit(k), Some(format!("k={k:.17e}")), |b| {
                family_k_sides(b, k)
            })
        }
        CheckId::ImprovedBrayMiao => verdict_from(name, bd, safety, unit, None, |b| {
            ((b.gradu_sq() / PI).sqrt(), b.willmore().sqrt() + 1.0)
        }),
        CheckId::CapacityRadius => verdict_from(name, bd, safety, unit, None, |b| {
            (2.0 * b.c() / b.rho0, b.willmore().sqrt() + 1.0)
        }),
        CheckId::HalfratioGradu => verdict_from(name, bd, safety, unit, None, |b| {
            (1.0 - (b.gradu_sq() / (4.0 * PI)).sqrt(), 0.5 * b.q())
        }),
        CheckId::RatioWillmore => verdict_from(name, bd, safety, unit, None, |b| (1.0 - b.willmore().sqrt(), b.q())),
        CheckId::Quadratic => {
            if !q_ok {
                return unmet(name, bd, "requires q <= 1");
            }
            verdict_from(name, bd, safety, unit, None, |b| {
                let q = b.q();
                ((2.0 - q) * (1.0 - q), b.h_gradu() / (4.0 * PI))
            })
        }
        CheckId::Willmore16Pi => {
            if !(bd.willmore() <= 1.0) {
                return unmet(name, bd, "requires (1/16π)∫H² <= 1");
            }
            verdict_from(
                name,
                bd,
                safety,
                bd.rho0,
                Some("gate (1/16π)∫H² <= 1 met".into()),
                |b| (0.0, b.mass),
            )
        }
        CheckId::MassUpper => {
            if !q_ok {
                return unmet(name, bd, "requires q <= 1");
            }
            verdict_from(name, bd, safety, bd.rho0, None, |b| {
                (b.mass, 0.5 * b.rho0 * (1.0 + b.willmore().sqrt()))
            })
        }
        CheckId::GraduLower => {
            if !q_ok {
                return unmet(name, bd, "requires q <= 1");
            }
            verdict_from(name, bd, safety, unit, None, |b| (1.0, b.gradu_sq() / PI))
        }
        CheckId::NonnegMassgap => verdict_from(name, bd, safety, unit, None, |b| {
            (0.0, b.q() + b.willmore().sqrt() - 1.0)
        }),
    }
}

/// bdry-ineq on the level set Σ_t:
/// 3/(1-t)² ∫|∇u|² <= 4π + 1/(1-t) ∫H|∇u|, i.e. 12π/(1+D)² <= 4π + 8πw/(1+D).
pub fn check_bdry_ineq_at(pot: &Potential, t: f64, safety: f64) -> Result<Verdict> {
    let rho = pot.level_radius(t)?;
    let d = pot.tail(rho)?;
    let w = pot.profile().lapse(rho);
    let sides = |d: f64| (12.0 * PI / (1.0 + d).powi(2), 4.0 * PI + 8.0 * PI * w / (1.0 + d));
    let (lhs, rhs) = sides(d.value);
    let (l1, r1) = sides(d.value + d.err);
    let slack = rhs - lhs;
    let tolerance = safety * ((r1 - l1) - slack).abs() + 1e3 * f64::EPSILON * lhs.abs().max(rhs.abs());
    Ok(Verdict {
        id: CheckId::BdryIneq(t).to_string(),
        lhs,
        rhs,
        slack,
        tolerance,
        status: classify(slack, tolerance),
        context: BoundaryData::from_potential(pot).context(),
        note: Some(format!("rho={rho:.17e}")),
    })
}

pub fn check(pot: &Potential, id: CheckId) -> Result<Verdict> {
    check_with(pot, id, DEFAULT_SAFETY)
}

pub fn check_with(pot: &Potential, id: CheckId, safety: f64) -> Result<Verdict> {
    match id {
        CheckId::BdryIneq(t) if t != 0.0 => check_bdry_ineq_at(pot, t, safety),
        _ => Ok(check_boundary(&BoundaryData::from_potential(pot), id, safety)),
    }
}

/// The full catalog at t = 0.
pub fn catalog(pot: &Potential, safety: f64) -> Vec<Verdict> {
    let bd = BoundaryData::from_potential(pot);
    CheckId::catalog()
        .into_iter()
        .map(|id| check_boundary(&bd, id, safety))
        .collect()
}

/// The slacks of bdry-ineq, mass-a, mass-b and amo are linked by
/// slack(mass-a) = 3 slack(mass-b) + slack(bdry-ineq) and
/// slack(amo) = slack(bdry-ineq) + 2 slack(mass-b). Returns both residuals
/// and a rounding scale, or None if the verdicts are missing.
pub fn implication_residuals(verdicts: &[Verdict]) -> Option<(f64, f64, f64)> {
    let get = |id: CheckId| verdicts.iter().find(|v| v.id == id.to_string());
    let s1 = get(CheckId::BdryIneq(0.0))?;
    let s2 = get(CheckId::MassA)?;
    let s3 = get(CheckId::MassB)?;
    let s4 = get(CheckId::Amo)?;
    let scale = [s1, s2, s3, s4]
        .iter()
        .map(|v| v.lhs.abs().max(v.rhs.abs()))
        .fold(0.0, f64::max);
    Some((
        s2.slack - 3.0 * s3.slack - s1.slack,
        s4.slack - s1.slack - 2.0 * s3.slack,
        64.0 * f64::EPSILON * scale,
    ))
}

/// Roots x = 𝔪/𝔠_r in (0, 1] of (2 - x)(1 - x)x = 𝔪H.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    /// Descending; the first root belongs to the inner sphere r1.
    pub roots: Vec<f64>,
    pub double_root: bool,
    /// For 𝔪H = 0 the domain boundary x → 0 is a limit root.
    pub limit_root_at_zero: bool,
    pub photon_sphere: bool,
}

pub const PHOTON_MH: f64 = 0.384_900_179_459_750_5; // 2/(3√3)

pub fn schwarzschild_roots_for_mh(mh: f64) -> Result<RootSet> {
    if !(mh >= 0.0) {
        return Err(Error::Domain(format!("mH must be nonnegative, got {mh}")));
    }
    let photon = 2.0 / (3.0 * 3f64.sqrt());
    let at_photon = (mh - photon).abs() <= 1e-12;
    if mh > photon && !at_photon {
        return Ok(RootSet {
            roots: vec![],
            double_root: false,
            limit_root_at_zero: false,
            photon_sphere: false,
        });
    }
    if at_photon {
        return Ok(RootSet {
            roots: vec![1.0 - 1.0 / 3f64.sqrt()],
            double_root: true,
            limit_root_at_zero: false,
            photon_sphere: true,
        });
    }
    // x = 1 + y turns the cubic into y³ - y - mH = 0.
    let theta = (1.5 * 3f64.sqrt() * mh).clamp(-1.0, 1.0).acos();
    let amp = 2.0 / 3f64.sqrt();
    let mut roots: Vec<f64> = (0..3)
        .map(|k| {
            let mut y = amp * (theta / 3.0 - 2.0 * PI * k as f64 / 3.0).cos();
            for _ in 0..3 {
                let f = y * y * y - y - mh;
                let df = 3.0 * y * y - 1.0;
                if df != 0.0 {
                    y -= f / df;
                }
            }
            1.0 + y
        })
        .filter(|&x| x > 1e-14 && x <= 1.0 + 1e-14)
        .map(|x| x.min(1.0))
        .collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(RootSet {
        roots,
        double_root: false,
        limit_root_at_zero: mh == 0.0,
        photon_sphere: false,
    })
}

/// Location of the largest mean curvature of the coordinate spheres on
/// [rho0, ∞). dH/dρ has the sign of 3m/ρ - m' - 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HExtremum {
    pub rho: f64,
    pub h: f64,
    pub interior: bool,
    /// Golden-section estimate of the same maximum, as a cross-check.
    pub golden_rho: f64,
}

pub fn max_mean_curvature(profile: &MassProfile) -> Result<HExtremum> {
    let rho0 = profile.rho0();
    let slope = |r: f64| 3.0 * profile.mass(r) / r - profile.mass_prime(r) - 1.0;
    let grid = log_grid(rho0, 512);
    let mut best = HExtremum {
        rho: rho0,
        h: profile.mean_curvature(rho0),
        interior: false,
        golden_rho: rho0,
    };
    for w in grid.windows(2) {
        if slope(w[0]) > 0.0 && slope(w[1]) <= 0.0 {
            let r = brent(|r| Ok(slope(r)), w[0], w[1], 0.0, 200)?;
            let h = profile.mean_curvature(r);
            if h > best.h {
                let (g, _) = golden_max(|r| profile.mean_curvature(r), w[0], w[1], 1e-12 * w[1]);
                best = HExtremum {
                    rho: r,
                    h,
                    interior: true,
                    golden_rho: g,
                };
            }
        }
    }
    Ok(best)
}

/// Isotropic radius of the Schwarzschild sphere of area radius ρ:
/// r = ((sqrt ρ + sqrt(ρ - 2m))/2)².
pub fn isotropic_radius(mass: f64, rho: f64) -> f64 {
    let z = 0.5 * (rho.sqrt() + (rho - 2.0 * mass).max(0.0).sqrt());
    z * z
}

/// The photon sphere of Schwarzschild of mass `mass`, located numerically as
/// the maximiser of 𝔪H. Returns (isotropic r, 𝔪H).
pub fn photon_sphere(mass: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0) {
        return Err(Error::Domain("photon sphere needs positive mass".into()));
    }
    let p = crate::metric::build_schwarzschild(mass, 2.0 * mass)?;
    let ext = max_mean_curvature(&p)?;
    Ok((isotropic_radius(mass, ext.rho), mass * ext.h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    PreconditionUnmet,
    /// H vanishes on Σ.
    Horizon,
    /// 0 < 𝔪H_max < 2/(3√3).
    BelowPhoton,
    /// 𝔪H_max >= 2/(3√3).
    PhotonOrAbove,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub q: f64,
    pub h_max: f64,
    pub m_h_max: f64,
    /// Largest coordinate-sphere mean curvature over the whole exterior.
    pub h_sup_exterior: f64,
    pub branch: Branch,
    pub roots: Option<RootSet>,
    /// Comparison capacities 𝔪/x of the two Schwarzschild spheres.
    pub c_r1: Option<f64>,
    pub c_r2: Option<f64>,
    /// 𝔠 <= 𝔠_r1 or 𝔠 >= 𝔠_r2, as a verdict on the better of the two.
    pub disjunction: Option<Verdict>,
    /// In the horizon branch, whether the profile is vacuum on the sampled
    /// grid (m' ≡ 0).
    pub vacuum: Option<bool>,
}

pub fn classify_m2c(pot: &Potential) -> Result<Classification> {
    let bd = BoundaryData::from_potential(pot);
    let p = pot.profile();
    let q = bd.q();
    let h_max = bd.mean_curvature;
    let m_h = bd.mass * h_max;
    let ext = max_mean_curvature(p)?;
    let mut out = Classification {
        q,
        h_max,
        m_h_max: m_h,
        h_sup_exterior: ext.h,
        branch: Branch::PreconditionUnmet,
        roots: None,
        c_r1: None,
        c_r2: None,
        disjunction: None,
        vacuum: None,
    };
    if !(bd.mass > 0.0) || !bd.q_at_most_one(DEFAULT_SAFETY) {
        return Ok(out);
    }
    if h_max <= 1e-12 / bd.rho0 {
        out.branch = Branch::Horizon;
        out.vacuum = Some(
            log_grid(bd.rho0, 512)
                .iter()
                .all(|&r| p.mass_prime(r).abs() <= 1e-12 * (p.mass(r).abs() / r)),
        );
        return Ok(out);
    }
    let roots = schwarzschild_roots_for_mh(m_h)?;
    if m_h >= PHOTON_MH - 1e-12 {
        out.branch = Branch::PhotonOrAbove;
        out.roots = Some(roots);
        return Ok(out);
    }
    out.branch = Branch::BelowPhoton;
    if roots.roots.len() == 2 {
        let m = bd.mass;
        let (c1, c2) = (m / roots.roots[0], m / roots.roots[1]);
        out.c_r1 = Some(c1);
        out.c_r2 = Some(c2);
        let s1 = c1 - bd.c();
        let s2 = bd.c() - c2;
        let v = if s1 >= s2 {
            verdict_from(
                "m2c-disjunction".into(),
                &bd,
                DEFAULT_SAFETY,
                c2,
                Some("c <= c_r1".into()),
                |b| (b.c(), c1),
            )
        } else {
            verdict_from(
                "m2c-disjunction".into(),
                &bd,
                DEFAULT_SAFETY,
                c2,
                Some("c >= c_r2".into()),
                |b| (c2, b.c()),
            )
        };
        out.disjunction = Some(v);
    }
    out.roots = Some(roots);
    Ok(out)
}

/// Hypotheses of the shielding conditions on one annulus and the 𝔪 > 0
/// conclusion they imply.
#[derive(Clone, Debug, PartialEq)]
pub struct ShieldReport {
    pub annulus: AnnulusData,
    pub h: f64,
    /// H <= 2/𝔠(Ω).
    pub by_capacity: bool,
    /// H <= 8πL²/Vol(Ω).
    pub by_volume: bool,
    /// ∫_{S_0} |∇u_Ω|² <= 4π.
    pub by_energy: bool,
    /// Present when some hypothesis holds; strict 𝔪 > 0 is required.
    pub conclusion: Option<Verdict>,
}

pub fn shield_conditions(pot: &Potential, rho_a: f64, rho_b: f64) -> Result<ShieldReport> {
    let an = pot.relative_capacity(rho_a, rho_b)?;
    let bd = BoundaryData::from_potential(pot);
    let h = bd.mean_curvature;
    let by_capacity = h <= 2.0 / an.capacity.value;
    let by_volume = an.volume.value.is_finite() && h <= 8.0 * PI * an.distance.value.powi(2) / an.volume.value;
    let by_energy = an.boundary_energy.value <= 4.0 * PI;
    let conclusion = (by_capacity || by_volume || by_energy).then(|| {
        let mut v = verdict_from("shield-positive-mass".into(), &bd, DEFAULT_SAFETY, bd.rho0, None, |b| {
            (0.0, b.mass)
        });
        // The conclusion is strict: 𝔪 = 0 does not pass.
        if v.status == Status::Equality {
            v.status = Status::Violated;
        }
        v
    });
    Ok(ShieldReport {
        annulus: an,
        h,
        by_capacity,
        by_volume,
        by_energy,
        conclusion,
    })
}

/// A radial function N with two derivatives.
#[derive(Clone)]
pub struct RadialFunction {
    pub f: RadialFn,
    pub f_prime: RadialFn,
    pub f_second: RadialFn,
}

impl RadialFunction {
    pub fn constant(c: f64) -> Self {
        Self {
            f: std::sync::Arc::new(move |_| c),
            f_prime: std::sync::Arc::new(|_| 0.0),
            f_second: std::sync::Arc::new(|_| 0.0),
        }
    }

    /// N = w, the Schwarzschild static potential.
    pub fn lapse(profile: &MassProfile) -> Self {
        let (p1, p2, p3) = (profile.clone(), profile.clone(), profile.clone());
        Self {
            f: std::sync::Arc::new(move |r| p1.lapse(r)),
            f_prime: std::sync::Arc::new(move |r| p2.lapse_prime(r)),
            f_second: std::sync::Arc::new(move |r| {
                let w = p3.lapse(r);
                let wp = p3.lapse_prime(r);
                let m = p3.mass(r);
                let mp = p3.mass_prime(r);
                let mpp = p3.mass_second(r);
                ((-2.0 * m / (r * r * r) + 2.0 * mp / (r * r) - mpp / r) - wp * wp) / w
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticResidual {
    /// sup |N Ric(ν,ν) - ∇²N(ν,ν)|.
    pub normal: f64,
    /// sup |N Ric(e,e) - ∇²N(e,e)|.
    pub tangential: f64,
    /// sup |ΔN|.
    pub laplacian: f64,
    pub rho_worst: f64,
    /// When the residuals vanish, whether q <= 1 as the static case demands.
    pub q_le_one: Option<bool>,
}

impl StaticResidual {
    pub fn max(&self) -> f64 {
        self.normal.max(self.tangential).max(self.laplacian)
    }
}

pub const STATIC_VANISH: f64 = 1e-10;

/// Residuals of N Ric = ∇²N and ΔN = 0 on the validation grid, excluding the
/// boundary sphere itself.
pub fn static_residual(pot: &Potential, n: &RadialFunction) -> Result<StaticResidual> {
    let p = pot.profile();
    let grid = log_grid(p.rho0(), 512);
    let mut out = StaticResidual {
        normal: 0.0,
        tangential: 0.0,
        laplacian: 0.0,
        rho_worst: grid[1],
        q_le_one: None,
    };
    let mut worst = -1.0;
    for &r in &grid[1..] {
        let nv = (n.f)(r);
        if !(nv > 0.0) {
            return Err(Error::Domain(format!(
                "static potential N = {nv} is not positive at rho = {r}"
            )));
        }
        let n1 = (n.f_prime)(r);
        let n2 = (n.f_second)(r);
        let w = p.lapse(r);
        let wp = p.lapse_prime(r);
        let hnn = w * w * n2 + w * wp * n1;
        let htt = w * w * n1 / r;
        let (rnn, rtt) = p.ricci(r);
        let a = (nv * rnn - hnn).abs();
        let b = (nv * rtt - htt).abs();
        let c = (hnn + 2.0 * htt).abs();
        out.normal = out.normal.max(a);
        out.tangential = out.tangential.max(b);
        out.laplacian = out.laplacian.max(c);
        let m = a.max(b).max(c);
        if m > worst {
            worst = m;
            out.rho_worst = r;
        }
    }
    if out.max() <= STATIC_VANISH {
        out.q_le_one = Some(BoundaryData::from_potential(pot).q_at_most_one(DEFAULT_SAFETY));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_ids_parse() {
        assert_eq!("mass-a".parse::<CheckId>().unwrap(), CheckId::MassA);
        assert_eq!("7".parse::<CheckId>().unwrap(), CheckId::ImprovedBrayMiao);
        assert_eq!("family-k@1.5".parse::<CheckId>().unwrap(), CheckId::FamilyK(Some(1.5)));
        assert_eq!("bdry-ineq@0.25".parse::<CheckId>().unwrap(), CheckId::BdryIneq(0.25));
        assert!("bdry-ineq@1.5".parse::<CheckId>().is_err());
        assert!("mass-a@2".parse::<CheckId>().is_err());
        assert!("nope".parse::<CheckId>().is_err());
        for id in CheckId::catalog() {
            assert_eq!(id.to_string().parse::<CheckId>().unwrap(), id);
        }
    }

    #[test]
    fn status_bands() {
        assert_eq!(classify(0.0, 0.0), Status::Equality);
        assert_eq!(classify(1e-9, 1e-8), Status::Equality);
        assert_eq!(classify(1e-7, 1e-8), Status::SatisfiedStrict);
        assert_eq!(classify(-1e-7, 1e-8), Status::Violated);
    }

    #[test]
    fn photon_constant() {
        assert!((PHOTON_MH - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-16);
    }
}
