//! Conformal deformation ḡ = v⁴g, ū = u/v with v = u + (1 - u)/k, evaluated
//! on boundary data only, and the optimisation over k.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::inequalities::{classify, verdict_from, BoundaryData, CheckId, Status, Verdict, DEFAULT_SAFETY};
use crate::potential::Potential;
use crate::roots::golden_max;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformedBoundaryData {
    pub k: f64,
    pub c_v: f64,
    pub m_bar: f64,
    pub c_bar: f64,
    /// ∫|∇̄ū|² dσ̄.
    pub gradu_sq: f64,
    /// ∫H̄|∇̄ū| dσ̄.
    pub h_gradu: f64,
}

impl DeformedBoundaryData {
    pub fn q_bar(&self) -> f64 {
        self.m_bar / self.c_bar
    }

    /// Residuals of the flat-space equalities 8π - ∫H̄ā = 12π q̄ and
    /// 4π - ∫ā² = 4π q̄, as (mass-a, mass-b).
    pub fn flat_equality_residuals(&self) -> (f64, f64) {
        let q = self.q_bar();
        (
            12.0 * PI * q - (8.0 * PI - self.h_gradu),
            4.0 * PI * q - (4.0 * PI - self.gradu_sq),
        )
    }

    /// Slack of the family-k inequality for the deformed triple at parameter kk.
    pub fn family_k_slack(&self, kk: f64) -> f64 {
        4.0 * PI + kk * self.h_gradu - kk * (4.0 - kk) * self.gradu_sq
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "deformation parameter must be positive, got {k}"
        )))
    }
}

/// The deformation applied to boundary data. With v = 1/k on Σ and
/// ∂_ν v = (1 - 1/k)|∇u|, the energy scales by k² and
/// ∫H̄|∇̄ū| = k∫H|∇u| + 4k(k - 1)∫|∇u|².
pub fn deform(bd: &BoundaryData, k: f64) -> Result<DeformedBoundaryData> {
    check_k(k)?;
    let c = bd.c();
    let c_v = (1.0 - 1.0 / k) * c;
    let alpha = bd.gradu_sq();
    let out = DeformedBoundaryData {
        k,
        c_v,
        m_bar: bd.mass - 2.0 * c_v,
        c_bar: c / k,
        gradu_sq: k * k * alpha,
        h_gradu: k * bd.h_gradu() + 4.0 * k * (k - 1.0) * alpha,
    };
    debug_assert!(out.c_bar > 0.0);
    Ok(out)
}

pub fn deform_boundary_data(pot: &Potential, k: f64) -> Result<DeformedBoundaryData> {
    deform(&BoundaryData::from_potential(pot), k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transformed {
    MassB,
    BdryIneq,
}

impl Transformed {
    pub fn name(&self) -> &'static str {
        match self {
            Transformed::MassB => "mass-b",
            Transformed::BdryIneq => "bdry-ineq",
        }
    }
}

/// (lhs, rhs) of the transformed inequality, slack = rhs - lhs.
/// mass-b: 2 - 1/k - kα/4π <= q. bdry-ineq: k(4 - k)α <= 4π + k∫H|∇u|.
fn sides(bd: &BoundaryData, which: Transformed, k: f64) -> (f64, f64) {
    match which {
        Transformed::MassB => (mass_b_bound(bd, k), bd.q()),
        Transformed::BdryIneq => (k * (4.0 - k) * bd.gradu_sq(), 4.0 * PI + k * bd.h_gradu()),
    }
}

/// Lower bound on q from transformed mass-b at parameter k.
pub fn mass_b_bound(bd: &BoundaryData, k: f64) -> f64 {
    2.0 - 1.0 / k - k * bd.gradu_sq() / (4.0 * PI)
}

pub fn transformed_inequality_bd(bd: &BoundaryData, which: Transformed, k: f64, safety: f64) -> Result<Verdict> {
    check_k(k)?;
    let id = format!("conformal-{}@{k}", which.name());
    let unit = match which {
        Transformed::MassB => (2.0 + k + 1.0 / k) * (1.0 + bd.q().abs()),
        Transformed::BdryIneq => 4.0 * PI * (1.0 + k * k) * (1.0 + bd.q().abs()),
    };
    Ok(verdict_from(id, bd, safety, unit, None, |b| sides(b, which, k)))
}

pub fn transformed_inequality(pot: &Potential, which: Transformed, k: f64) -> Result<Verdict> {
    transformed_inequality_bd(&BoundaryData::from_potential(pot), which, k, DEFAULT_SAFETY)
}

/// At k = 1 the transformed checks are the plain ones.
pub fn untransformed_id(which: Transformed) -> CheckId {
    match which {
        Transformed::MassB => CheckId::MassB,
        Transformed::BdryIneq => CheckId::BdryIneq(0.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalK {
    /// ((1/4π)∫|∇u|²)^(-1/2).
    pub k_star: f64,
    /// 1 - 1/k*, a lower bound for 𝔪/(2𝔠).
    pub bound: f64,
    /// Maximiser of the mass-b bound found numerically on a log grid refined
    /// by golden section.
    pub k_numeric: f64,
    pub agrees: bool,
    /// Verdict of 𝔪/(2𝔠) >= bound.
    pub status: Status,
}

pub const K_AGREEMENT: f64 = 1e-6;

pub fn optimal_k_bd(bd: &BoundaryData) -> OptimalK {
    let ratio = bd.gradu_sq() / (4.0 * PI);
    let k_star = 1.0 / ratio.sqrt();
    let bound = 1.0 - 1.0 / k_star;

    // Coarse scan in ln k, then golden section on the bracketing cell.
    let n = 257;
    let (lo, hi) = ((1e-3f64).ln(), (1e3f64).ln());
    let at = |i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let f = |lk: f64| mass_b_bound(bd, lk.exp());
    let best = (0..n).max_by(|&i, &j| f(at(i)).total_cmp(&f(at(j)))).unwrap_or(0);
    let a = at(best.saturating_sub(1));
    let b = at((best + 1).min(n - 1));
    let (lk, _) = golden_max(f, a, b, 1e-12);
    let k_numeric = lk.exp();
    let agrees = ((k_numeric - k_star) / k_star).abs() <= K_AGREEMENT;

    let slack = 0.5 * bd.q() - bound;
    let dq = 0.5 * bd.q() * bd.capacity.rel_err();
    let dk = 0.5 * bound.abs().max(1.0) * bd.capacity.rel_err();
    let tol = DEFAULT_SAFETY * (dq + dk) + 1e3 * f64::EPSILON * bound.abs().max(1.0);
    OptimalK {
        k_star,
        bound,
        k_numeric,
        agrees,
        status: classify(slack, tol),
    }
}

pub fn optimal_k(pot: &Potential) -> OptimalK {
    optimal_k_bd(&BoundaryData::from_potential(pot))
}
