//! Spherically symmetric asymptotically flat metrics in area-radius gauge,
//! g = w(ρ)^-2 dρ² + ρ² dΩ² with w = sqrt(1 - 2 m(ρ)/ρ).

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extrap::richardson;
use crate::pchip::Pchip;
use crate::roots::brent;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Decay of m_adm - m(ρ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// m is constant; no tail at all.
    Exact,
    Exponent(f64),
}

impl Decay {
    pub fn exponent(&self) -> f64 {
        match self {
            Decay::Exact => f64::INFINITY,
            Decay::Exponent(d) => *d,
        }
    }
}

/// Quasi-local mass profile of a spherically symmetric metric with inner
/// boundary at area radius `rho0`.
#[derive(Clone)]
pub struct MassProfile {
    rho0: f64,
    m: RadialFn,
    m_prime: RadialFn,
    m_second: Option<RadialFn>,
    m_adm: f64,
    decay: Decay,
    label: String,
    /// Radii where m'' may jump; quadratures split there.
    breaks: Vec<f64>,
}

impl fmt::Debug for MassProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MassProfile")
            .field("label", &self.label)
            .field("rho0", &self.rho0)
            .field("m_adm", &self.m_adm)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

/// Grid used by validation and the static-potential residual: `n` points
/// spaced logarithmically on [rho0, 10^6 rho0].
pub fn log_grid(rho0: f64, n: usize) -> Vec<f64> {
    let span = 1e6f64.ln();
    (0..n)
        .map(|i| rho0 * (span * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub const VALIDATION_POINTS: usize = 512;

impl MassProfile {
    /// A profile from user closures. `m_second` may be omitted, in which case
    /// it is approximated by differencing `m_prime`.
    pub fn custom(
        label: impl Into<String>,
        rho0: f64,
        m: RadialFn,
        m_prime: RadialFn,
        m_second: Option<RadialFn>,
        m_adm: f64,
        decay: Decay,
    ) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::InvalidProfile(format!("rho0 must be positive, got {rho0}")));
        }
        if !m_adm.is_finite() {
            return Err(Error::InvalidProfile("m_adm must be finite".into()));
        }
        if let Decay::Exponent(d) = decay {
            if !(d > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "decay exponent must be positive, got {d}"
                )));
            }
        }
        Ok(Self {
            rho0,
            m,
            m_prime,
            m_second,
            m_adm,
            decay,
            label: label.into(),
            breaks: Vec::new(),
        })
    }

    /// Declare radii where m'' is discontinuous.
    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| b.is_finite() && *b > self.rho0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Declared breaks strictly inside (lo, hi).
    pub fn breaks_between(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.breaks.iter().copied().filter(move |&b| b > lo && b < hi)
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    /// The asymptotic mass carried by the profile, without any check.
    pub fn m_adm(&self) -> f64 {
        self.m_adm
    }

    pub fn mass(&self, rho: f64) -> f64 {
        (self.m)(rho)
    }

    pub fn mass_prime(&self, rho: f64) -> f64 {
        (self.m_prime)(rho)
    }

    pub fn has_analytic_second(&self) -> bool {
        self.m_second.is_some()
    }

    pub fn mass_second(&self, rho: f64) -> f64 {
        match &self.m_second {
            Some(f) => f(rho),
            None => {
                let h = 1e-5 * rho;
                (self.mass_prime(rho + h) - self.mass_prime(rho - h)) / (2.0 * h)
            }
        }
    }

    /// 2m/ρ.
    fn two_m_over(&self, rho: f64) -> f64 {
        2.0 * self.mass(rho) / rho
    }

    /// w = sqrt(1 - 2m/ρ), clamped at zero.
    pub fn lapse(&self, rho: f64) -> f64 {
        let m = self.mass(rho);
        ((rho - 2.0 * m) / rho).max(0.0).sqrt()
    }

    /// 1 - w without cancellation.
    pub fn one_minus_lapse(&self, rho: f64) -> f64 {
        let w = self.lapse(rho);
        self.two_m_over(rho) / (1.0 + w)
    }

    /// 1/w - 1 without cancellation.
    pub fn inv_lapse_minus_one(&self, rho: f64) -> f64 {
        let w = self.lapse(rho);
        self.two_m_over(rho) / (w * (1.0 + w))
    }

    /// dw/dρ.
    pub fn lapse_prime(&self, rho: f64) -> f64 {
        let w = self.lapse(rho);
        (self.mass(rho) / rho - self.mass_prime(rho)) / (rho * w)
    }

    /// Mean curvature of the coordinate sphere, 2w/ρ.
    pub fn mean_curvature(&self, rho: f64) -> f64 {
        2.0 * self.lapse(rho) / rho
    }

    /// Hawking mass of the coordinate sphere, (ρ/2)(1 - w²).
    pub fn hawking_mass(&self, rho: f64) -> f64 {
        let w = self.lapse(rho);
        0.5 * rho * (1.0 - w * w)
    }

    /// True when the inner boundary is (numerically) a minimal surface.
    pub fn horizon_boundary(&self) -> bool {
        self.lapse(self.rho0) < 1e-6
    }

    pub fn scalar_curvature(&self, rho: f64) -> f64 {
        4.0 * self.mass_prime(rho) / (rho * rho)
    }

    /// (Ric(ν,ν), Ric(e,e)) for the radial unit normal ν and a unit tangent e.
    pub fn ricci(&self, rho: f64) -> (f64, f64) {
        let m = self.mass(rho);
        let mp = self.mass_prime(rho);
        let r3 = rho * rho * rho;
        (-2.0 * m / r3 + 2.0 * mp / (rho * rho), m / r3 + mp / (rho * rho))
    }
}

pub fn scalar_curvature(profile: &MassProfile, rho: f64) -> f64 {
    profile.scalar_curvature(rho)
}

pub fn build_flat(rho0: f64) -> Result<MassProfile> {
    let mut p = build_schwarzschild(0.0, rho0)?;
    p.label = "flat".into();
    Ok(p)
}

pub fn build_schwarzschild(mass: f64, rho0: f64) -> Result<MassProfile> {
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(Error::InvalidProfile(format!("mass must be nonnegative, got {mass}")));
    }
    if !(rho0 > 0.0) || rho0 < 2.0 * mass {
        return Err(Error::InvalidProfile(format!(
            "boundary rho0 = {rho0} lies inside the horizon 2m = {}",
            2.0 * mass
        )));
    }
    MassProfile::custom(
        "schwarzschild",
        rho0,
        Arc::new(move |_| mass),
        Arc::new(|_| 0.0),
        Some(Arc::new(|_| 0.0)),
        mass,
        Decay::Exact,
    )
}

/// m(ρ) = m_inf (1 - (rho0/ρ)^p).
pub fn build_polytail(m_inf: f64, p: f64, rho0: f64) -> Result<MassProfile> {
    if !(p >= 1.0) {
        return Err(Error::InvalidProfile(format!(
            "polytail exponent must be >= 1, got {p}"
        )));
    }
    if !(m_inf >= 0.0) || !(rho0 > 0.0) || !(2.0 * m_inf < rho0) {
        return Err(Error::InvalidProfile(format!(
            "polytail needs m_inf >= 0 and 2 m_inf < rho0, got m_inf = {m_inf}, rho0 = {rho0}"
        )));
    }
    MassProfile::custom(
        "polytail",
        rho0,
        Arc::new(move |r| m_inf * (1.0 - (rho0 / r).powf(p))),
        Arc::new(move |r| m_inf * p * (rho0 / r).powf(p) / r),
        Some(Arc::new(move |r| -m_inf * p * (p + 1.0) * (rho0 / r).powf(p) / (r * r))),
        m_inf,
        Decay::Exponent(p),
    )
}

/// m(ρ) = m_adm (1 - φ(rho0/ρ)) with φ a random monotone cubic spline on
/// [0, 1], φ(0) = 0. The knot increments and φ(1) are drawn from `seed`.
pub fn build_spline(m_adm: f64, rho0: f64, knots: usize, seed: u64) -> Result<MassProfile> {
    if knots < 2 {
        return Err(Error::InvalidProfile("spline needs at least 2 intervals".into()));
    }
    if !(m_adm >= 0.0) || !(rho0 > 0.0) || !(2.0 * m_adm < rho0) {
        return Err(Error::InvalidProfile(format!(
            "spline needs m_adm >= 0 and 2 m_adm < rho0, got m_adm = {m_adm}, rho0 = {rho0}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let incs: Vec<f64> = (0..knots).map(|_| rng.gen_range(0.05..1.0)).collect();
    let top: f64 = rng.gen_range(0.2..0.95);
    let total: f64 = incs.iter().sum();
    let mut ys = vec![0.0];
    let mut acc = 0.0;
    for inc in &incs {
        acc += inc;
        ys.push(top * acc / total);
    }
    let xs: Vec<f64> = (0..=knots).map(|i| i as f64 / knots as f64).collect();
    let phi = Arc::new(Pchip::new(xs, ys)?);
    let (p1, p2, p3) = (phi.clone(), phi.clone(), phi);
    MassProfile::custom(
        format!("spline(seed={seed})"),
        rho0,
        Arc::new(move |r| m_adm * (1.0 - p1.eval(rho0 / r))),
        Arc::new(move |r| m_adm * p2.eval3(rho0 / r).1 * rho0 / (r * r)),
        Some(Arc::new(move |r| {
            let y = rho0 / r;
            let (_, d, dd) = p3.eval3(y);
            -m_adm * (dd * y * y + 2.0 * d * y) / (r * r)
        })),
        m_adm,
        Decay::Exponent(1.0),
    )
    .map(|p| p.with_breaks((1..knots).map(|i| rho0 * knots as f64 / i as f64).collect()))
}

/// m(ρ) = m_inf (1 - rho0/ρ) + h exp(-((ρ - center)/width)²). A large enough
/// bump makes m decrease past its centre, i.e. R < 0 there.
pub fn build_bump(m_inf: f64, rho0: f64, height: f64, center: f64, width: f64) -> Result<MassProfile> {
    if !(rho0 > 0.0) || !(width > 0.0) {
        return Err(Error::InvalidProfile("bump needs rho0 > 0 and width > 0".into()));
    }
    let g = move |r: f64| (-((r - center) / width).powi(2)).exp();
    MassProfile::custom(
        "bump",
        rho0,
        Arc::new(move |r| m_inf * (1.0 - rho0 / r) + height * g(r)),
        Arc::new(move |r| m_inf * rho0 / (r * r) - 2.0 * height * (r - center) / (width * width) * g(r)),
        Some(Arc::new(move |r| {
            let z = (r - center) / width;
            -2.0 * m_inf * rho0 / (r * r * r) + height * g(r) * (4.0 * z * z - 2.0) / (width * width)
        })),
        m_inf,
        Decay::Exponent(1.0),
    )
}

/// Radial conformal factor φ(r) of g = φ⁴ g_E on |x| >= r0.
#[derive(Clone)]
pub struct ConformalRadialFactor {
    pub phi: RadialFn,
    pub phi_prime: RadialFn,
    pub phi_second: RadialFn,
    pub r0: f64,
}

impl fmt::Debug for ConformalRadialFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalRadialFactor")
            .field("r0", &self.r0)
            .finish_non_exhaustive()
    }
}

impl ConformalRadialFactor {
    /// φ = 1 + a/r + b/r².
    pub fn poly(a: f64, b: f64, r0: f64) -> Self {
        Self {
            phi: Arc::new(move |r| 1.0 + a / r + b / (r * r)),
            phi_prime: Arc::new(move |r| -a / (r * r) - 2.0 * b / (r * r * r)),
            phi_second: Arc::new(move |r| 2.0 * a / (r * r * r) + 6.0 * b / (r * r * r * r)),
            r0,
        }
    }

    /// The Schwarzschild factor 1 + m/(2r).
    pub fn schwarzschild(mass: f64, r0: f64) -> Self {
        Self::poly(0.5 * mass, 0.0, r0)
    }

    /// Area radius r φ(r)².
    pub fn area_radius(&self, r: f64) -> f64 {
        let p = (self.phi)(r);
        r * p * p
    }

    /// dρ/dr = φ² + 2 r φ φ'.
    pub fn area_radius_prime(&self, r: f64) -> f64 {
        let p = (self.phi)(r);
        p * p + 2.0 * r * p * (self.phi_prime)(r)
    }

    /// Hawking mass of |x| = r, written as -2ρ x (1 + x) with x = r φ'/φ so
    /// that nothing cancels.
    pub fn hawking_mass(&self, r: f64) -> f64 {
        let p = (self.phi)(r);
        let x = r * (self.phi_prime)(r) / p;
        -2.0 * self.area_radius(r) * x * (1.0 + x)
    }

    /// dm/dρ = -(2r²/φ)(φ'' + 2φ'/r).
    pub fn mass_slope(&self, r: f64) -> f64 {
        let p = (self.phi)(r);
        -2.0 * r * r / p * ((self.phi_second)(r) + 2.0 * (self.phi_prime)(r) / r)
    }
}

/// Find the first r-interval of the grid where ρ(r) fails to increase.
fn monotone_violation(f: &ConformalRadialFactor) -> Option<(f64, f64)> {
    let grid = log_grid(f.r0, VALIDATION_POINTS);
    let bad = |r: f64, first: bool| {
        let d = f.area_radius_prime(r);
        if first {
            d < 0.0
        } else {
            !(d > 0.0)
        }
    };
    let start = grid.iter().enumerate().position(|(i, &r)| bad(r, i == 0))?;
    let end = grid[start..]
        .iter()
        .position(|&r| !bad(r, false))
        .map(|k| start + k)
        .unwrap_or(grid.len());
    // Refine both ends of the interval by bisection.
    let refine = |mut good: f64, mut badr: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (good + badr);
            if bad(mid, false) {
                badr = mid;
            } else {
                good = mid;
            }
        }
        badr
    };
    let lo = if start == 0 {
        grid[0]
    } else {
        refine(grid[start - 1], grid[start])
    };
    let hi = if end >= grid.len() {
        grid[grid.len() - 1]
    } else {
        refine(grid[end], grid[end - 1])
    };
    Some((lo, hi))
}

/// Convert a conformally flat radial metric to area-radius gauge. The mass
/// function is the Hawking mass of |x| = r read at ρ = r φ(r)².
pub fn from_conformal_radial(f: ConformalRadialFactor) -> Result<MassProfile> {
    let r0 = f.r0;
    if !(r0 > 0.0) {
        return Err(Error::InvalidProfile(format!("r0 must be positive, got {r0}")));
    }
    if let Some((r_lo, r_hi)) = monotone_violation(&f) {
        return Err(Error::NonMonotoneRadius { r_lo, r_hi });
    }
    let rho0 = f.area_radius(r0);
    // Asymptotic mass from the Hawking mass along r_j = 64 r0 2^j.
    let samples: Vec<f64> = (0..16)
        .map(|j| f.hawking_mass(64.0 * r0.max(1.0) * 2f64.powi(j)))
        .collect();
    let ex = richardson(&samples)?;
    let m_adm = ex.limit.value;
    let decay = if ex.order.is_finite() {
        Decay::Exponent(ex.order)
    } else {
        Decay::Exact
    };
    let f = Arc::new(f);
    let inv = {
        let f = f.clone();
        move |rho: f64| -> f64 { radius_of(&f, rho) }
    };
    let inv = Arc::new(inv);
    let (fa, fb, ia, ib) = (f.clone(), f, inv.clone(), inv);
    MassProfile::custom(
        "conformal",
        rho0,
        Arc::new(move |rho| fa.hawking_mass(ia(rho))),
        Arc::new(move |rho| fb.mass_slope(ib(rho))),
        None,
        m_adm,
        decay,
    )
}

/// Invert ρ(r) = r φ(r)². Points below rho0 are allowed as long as ρ stays
/// monotone there (finite differences step slightly under the boundary).
fn radius_of(f: &ConformalRadialFactor, rho: f64) -> f64 {
    let target = |r: f64| Ok(f.area_radius(r) - rho);
    let mut lo = f.r0;
    let mut hi = f.r0;
    let mut k = 0;
    while f.area_radius(lo) > rho && k < 80 {
        lo *= 0.999;
        k += 1;
    }
    k = 0;
    while f.area_radius(hi) < rho && k < 200 {
        hi = (hi * 2.0).max(rho);
        k += 1;
    }
    brent(target, lo, hi, 0.0, 200).unwrap_or(f64::NAN)
}

/// Returns m_adm after checking |m(cutoff) - m_adm| <= tol.
pub fn adm_mass_checked(profile: &MassProfile, cutoff: f64, tol: f64) -> Result<f64> {
    let tail = (profile.mass(cutoff) - profile.m_adm).abs();
    if !(tail <= tol) {
        return Err(Error::InvalidProfile(format!(
            "decay check failed: |m({cutoff:e}) - m_adm| = {tail:e} > {tol:e}"
        )));
    }
    Ok(profile.m_adm)
}

/// ADM mass with the default cutoff 10^8 rho0 and tolerance
/// 10^-6 max(1, |m_adm|).
pub fn adm_mass(profile: &MassProfile) -> Result<f64> {
    adm_mass_checked(profile, 1e8 * profile.rho0, 1e-6 * profile.m_adm.abs().max(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    HorizonFree,
    NonnegativeScalarCurvature,
    Decay,
    DerivativeConsistent,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::HorizonFree => "horizon-free",
            Condition::NonnegativeScalarCurvature => "nonnegative-scalar-curvature",
            Condition::Decay => "decay",
            Condition::DerivativeConsistent => "derivative-consistent",
        }
    }
}

/// First failure of one validation condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub condition: Condition,
    pub rho: f64,
    /// The offending quantity: 2m/ρ, m', ρ^δ |m_adm - m|, or the finite
    /// difference mismatch.
    pub value: f64,
    /// Bracket of the sign change when one was refined.
    pub interval: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub horizon_free: bool,
    pub nonnegative_scalar_curvature: bool,
    pub decay_ok: bool,
    pub derivative_consistent: bool,
    pub witnesses: Vec<Witness>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.horizon_free && self.nonnegative_scalar_curvature && self.decay_ok && self.derivative_consistent
    }

    pub fn first_witness(&self) -> Option<&Witness> {
        self.witnesses.first()
    }
}

/// Sample the profile on the validation grid. Failures are reported as data.
pub fn validate(profile: &MassProfile) -> ValidationReport {
    validate_with(profile, VALIDATION_POINTS)
}

pub fn validate_with(profile: &MassProfile, points: usize) -> ValidationReport {
    let grid = log_grid(profile.rho0, points.max(3));
    let mut witnesses = Vec::new();

    // Horizon: 2m(rho0) <= rho0, 2m(ρ) < ρ beyond.
    let mut horizon_free = true;
    for (i, &r) in grid.iter().enumerate() {
        let x = 2.0 * profile.mass(r) / r;
        let bad = if i == 0 { x > 1.0 + 1e-12 } else { !(x < 1.0) };
        if bad {
            horizon_free = false;
            witnesses.push(Witness {
                condition: Condition::HorizonFree,
                rho: r,
                value: x,
                interval: None,
            });
            break;
        }
    }

    // R >= 0 ⟺ m' >= 0, with a rounding allowance relative to m/ρ.
    let negative = |r: f64| {
        let mp = profile.mass_prime(r);
        mp < -1e-10 * (profile.mass(r).abs() / r) || mp.is_nan()
    };
    let mut nonneg = true;
    for (i, &r) in grid.iter().enumerate() {
        if negative(r) {
            nonneg = false;
            let interval = if i > 0 {
                let (mut good, mut bad) = (grid[i - 1], r);
                for _ in 0..60 {
                    let mid = 0.5 * (good + bad);
                    if negative(mid) {
                        bad = mid;
                    } else {
                        good = mid;
                    }
                }
                Some((good, bad))
            } else {
                None
            };
            witnesses.push(Witness {
                condition: Condition::NonnegativeScalarCurvature,
                rho: r,
                value: profile.mass_prime(r),
                interval,
            });
            break;
        }
    }

    // Decay: ρ^δ |m_adm - m| must stay bounded over the grid.
    let delta = profile.decay.exponent();
    let decay_ok = if delta.is_infinite() {
        let worst = grid
            .iter()
            .map(|&r| (r, (profile.mass(r) - profile.m_adm).abs()))
            .fold((grid[0], 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
        let tol = 1e-12 * profile.m_adm.abs().max(profile.rho0);
        if worst.1 > tol {
            witnesses.push(Witness {
                condition: Condition::Decay,
                rho: worst.0,
                value: worst.1,
                interval: None,
            });
            false
        } else {
            true
        }
    } else if !(delta > 0.5) {
        witnesses.push(Witness {
            condition: Condition::Decay,
            rho: profile.rho0,
            value: delta,
            interval: None,
        });
        false
    } else {
        let c = |r: f64| r.powf(delta) * (profile.mass(r) - profile.m_adm).abs();
        let half = grid.len() / 2;
        let early = grid[..half].iter().map(|&r| c(r)).fold(0.0f64, f64::max);
        let floor = 1e-9 * profile.m_adm.abs().max(profile.rho0) * grid[grid.len() - 1].powf(delta);
        let late = grid[half..]
            .iter()
            .map(|&r| (r, c(r)))
            .find(|&(_, v)| v > 10.0 * early + floor);
        match late {
            Some((r, v)) => {
                witnesses.push(Witness {
                    condition: Condition::Decay,
                    rho: r,
                    value: v,
                    interval: None,
                });
                false
            }
            None => true,
        }
    };

    // Finite-difference guard on m', step 1e-6 ρ, relative tolerance 1e-5.
    let mut derivative_consistent = true;
    for (i, &r) in grid.iter().enumerate() {
        let h = 1e-6 * r;
        let fd = if i == 0 {
            (profile.mass(r + h) - profile.mass(r)) / h
        } else {
            (profile.mass(r + h) - profile.mass(r - h)) / (2.0 * h)
        };
        let mp = profile.mass_prime(r);
        let scale = mp.abs().max(profile.mass(r).abs() / r).max(f64::MIN_POSITIVE);
        let tol = if i == 0 { 1e-4 } else { 1e-5 };
        if !((fd - mp).abs() <= tol * scale) {
            derivative_consistent = false;
            witnesses.push(Witness {
                condition: Condition::DerivativeConsistent,
                rho: r,
                value: fd - mp,
                interval: None,
            });
            break;
        }
    }

    ValidationReport {
        horizon_free,
        nonnegative_scalar_curvature: nonneg,
        decay_ok,
        derivative_consistent,
        witnesses,
    }
}
