//! Capacitary potential, capacity and level sets of a radial profile.
//!
//! Everything is expressed through the tail integral
//! D(ρ) = ρ ∫_ρ^∞ (1/w - 1) dx / x², which is small and computed without
//! cancellation. Then ∫_ρ^∞ dx/(x² w) = (1 + D)/ρ, the capacity is
//! rho0 / (1 + D(rho0)) and 1 - u(ρ) = 𝔠 (1 + D(ρ)) / ρ.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{MassProfile, RadialFn};
use crate::quad::{integrate_points, Estimate, Quad, QuadratureSpec};
use crate::roots::brent;

/// Integrate a fallible integrand; the first inner error wins over the
/// NonFinite error it provokes in the outer rule.
pub(crate) fn integrate_fallible<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Quad> {
    let stash: RefCell<Option<Error>> = RefCell::new(None);
    let r = integrate_points(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                stash.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        points,
        spec,
    );
    if let Some(e) = stash.into_inner() {
        return Err(e);
    }
    r
}

/// [lo, chart(breaks)..., hi] sorted, for breaks mapped into a chart.
fn chart_points(lo: f64, hi: f64, inner: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = inner.filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts
}

/// Geometry of one level set Σ_t = {u = t}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetSample {
    pub t: f64,
    pub rho: f64,
    pub area: f64,
    pub h: f64,
    pub grad_u: f64,
    pub willmore: f64,
    pub hawking: f64,
}

/// Relative capacity data of the annulus rho_a < ρ < rho_b.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusData {
    pub rho_a: f64,
    pub rho_b: f64,
    pub capacity: Estimate,
    /// ∫_{S_0} |∇u_Ω|² over the inner sphere.
    pub boundary_energy: Estimate,
    /// Radial distance between the two spheres.
    pub distance: Estimate,
    pub volume: Estimate,
}

/// Solver state for one profile: the profile, the quadrature settings and
/// the capacity, computed once.
#[derive(Clone, Debug)]
pub struct Potential {
    profile: MassProfile,
    quad: QuadratureSpec,
    singular: bool,
    d0: Estimate,
    capacity: Estimate,
}

impl Potential {
    pub fn new(profile: &MassProfile, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let singular = profile.horizon_boundary() || quad.endpoint_singular;
        let mut pot = Self {
            profile: profile.clone(),
            quad,
            singular,
            d0: Estimate::exact(0.0),
            capacity: Estimate::exact(profile.rho0()),
        };
        let d0 = pot.tail_with(profile.rho0(), &quad)?;
        let rho0 = profile.rho0();
        pot.d0 = d0;
        pot.capacity = Estimate::new(rho0 / (1.0 + d0.value), rho0 * d0.err / (1.0 + d0.value).powi(2));
        Ok(pot)
    }

    pub fn profile(&self) -> &MassProfile {
        &self.profile
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn rho0(&self) -> f64 {
        self.profile.rho0()
    }

    pub fn capacity(&self) -> Estimate {
        self.capacity
    }

    /// D(rho0).
    pub fn boundary_tail(&self) -> Estimate {
        self.d0
    }

    pub fn singular_boundary(&self) -> bool {
        self.singular
    }

    /// D(ρ) = ∫_0^1 (1/w - 1)(ρ/y) dy.
    pub fn tail(&self, rho: f64) -> Result<Estimate> {
        self.tail_with(rho, &self.quad)
    }

    pub(crate) fn tail_inner(&self, rho: f64) -> Result<Estimate> {
        self.tail_with(rho, &self.quad.inner())
    }

    fn tail_with(&self, rho: f64, spec: &QuadratureSpec) -> Result<Estimate> {
        if !(rho >= self.rho0()) {
            return Err(Error::Domain(format!("rho = {rho} below the boundary {}", self.rho0())));
        }
        let p = &self.profile;
        let scale = 2.0 * p.mass(rho).abs().max(p.m_adm().abs()) / rho;
        let spec = QuadratureSpec {
            abs_tol: spec.abs_tol * scale.min(1.0),
            ..*spec
        };
        let ys = p.breaks_between(rho, f64::INFINITY).map(|b| rho / b);
        let q = if self.singular && rho < 16.0 * self.rho0() {
            // y = 1 - σ² absorbs the 1/sqrt singularity at a horizon.
            integrate_points(
                |s| {
                    let y = 1.0 - s * s;
                    p.inv_lapse_minus_one(rho / y) * 2.0 * s
                },
                &chart_points(0.0, 1.0, ys.map(|y| (1.0 - y).sqrt())),
                &spec,
            )?
        } else {
            integrate_points(|y| p.inv_lapse_minus_one(rho / y), &chart_points(0.0, 1.0, ys), &spec)?
        };
        Ok(q.estimate())
    }

    /// 1 - u(ρ).
    pub fn complement(&self, rho: f64) -> Result<Estimate> {
        let d = self.tail(rho)?;
        Ok(self.complement_from_tail(rho, d))
    }

    pub(crate) fn complement_from_tail(&self, rho: f64, d: Estimate) -> Estimate {
        let c = self.capacity;
        let v = c.value * (1.0 + d.value) / rho;
        let err = v * (c.rel_err() + d.err / (1.0 + d.value));
        Estimate::new(v, err)
    }

    /// u(ρ) = (𝔠/rho0) ∫_0^σ 2σ'/w(rho0/(1 - σ'²)) dσ' with σ = sqrt(1 - rho0/ρ),
    /// accurate in relative terms for small u.
    fn forward_u(&self, sigma: f64) -> Result<Estimate> {
        let p = &self.profile;
        let rho0 = self.rho0();
        let spec = QuadratureSpec {
            abs_tol: self.quad.abs_tol * sigma * sigma,
            ..self.quad
        };
        let ss = p.breaks_between(rho0, f64::INFINITY).map(|b| (1.0 - rho0 / b).sqrt());
        let q = integrate_points(
            |s| {
                let y = 1.0 - s * s;
                2.0 * s / p.lapse(rho0 / y)
            },
            &chart_points(0.0, sigma, ss),
            &spec,
        )?;
        let c = self.capacity;
        let v = c.value / rho0 * q.value;
        Ok(Estimate::new(v, v.abs() * c.rel_err() + c.value / rho0 * q.err))
    }

    /// The capacitary function u(ρ).
    pub fn u(&self, rho: f64) -> Result<Estimate> {
        let rho0 = self.rho0();
        if !(rho >= rho0) {
            return Err(Error::Domain(format!("rho = {rho} below the boundary {rho0}")));
        }
        if rho == rho0 {
            return Ok(Estimate::exact(0.0));
        }
        if rho.is_infinite() {
            return Ok(Estimate::exact(1.0));
        }
        let s = self.complement(rho)?;
        if s.value > 0.5 {
            self.forward_u((1.0 - rho0 / rho).sqrt())
        } else {
            Ok(Estimate::new(1.0 - s.value, s.err))
        }
    }

    /// The unique ρ with u(ρ) = t.
    pub fn level_radius(&self, t: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Domain(format!("level t = {t} outside [0, 1)")));
        }
        let rho0 = self.rho0();
        if t == 0.0 {
            return Ok(rho0);
        }
        if t <= 0.5 {
            // Solve in σ = sqrt(1 - rho0/ρ), where u is smooth even at a horizon.
            let g = |sig: f64| -> Result<f64> { Ok(self.forward_u(sig)?.value - t) };
            let mut hi_rho = 2.0 * rho0;
            let mut k = 0;
            while g((1.0 - rho0 / hi_rho).sqrt())? < 0.0 {
                hi_rho *= 2.0;
                k += 1;
                if k > 200 {
                    return Err(Error::Root(format!("could not bracket level t = {t}")));
                }
            }
            let sig = brent(g, 0.0, (1.0 - rho0 / hi_rho).sqrt(), 1e-17, 200)?;
            return Ok(rho0 / (1.0 - sig * sig));
        }
        let st = 1.0 - t;
        let c = self.capacity.value;
        let h = |x: f64| -> Result<f64> {
            let rho = x.exp().max(rho0);
            let d = self.tail(rho)?;
            Ok(c * (1.0 + d.value) / (rho * st) - 1.0)
        };
        let guess = (c / st).max(rho0);
        let mut lo = guess;
        let mut hi = guess;
        let mut k = 0;
        while h(lo.ln())? < 0.0 {
            lo = (0.5 * lo).max(rho0);
            k += 1;
            if k > 200 || (lo == rho0 && h(lo.ln())? < 0.0) {
                return Err(Error::Root(format!("could not bracket level t = {t} from below")));
            }
        }
        k = 0;
        while h(hi.ln())? > 0.0 {
            hi *= 2.0;
            k += 1;
            if k > 200 {
                return Err(Error::Root(format!("could not bracket level t = {t} from above")));
            }
        }
        let x = brent(h, lo.ln(), hi.ln(), 1e-15, 200)?;
        Ok(x.exp().max(rho0))
    }

    /// Level-set data of the coordinate sphere of area radius `rho`.
    pub fn sample_at_radius(&self, rho: f64, t: f64) -> LevelSetSample {
        let p = &self.profile;
        let w = p.lapse(rho);
        LevelSetSample {
            t,
            rho,
            area: 4.0 * PI * rho * rho,
            h: 2.0 * w / rho,
            grad_u: self.capacity.value / (rho * rho),
            willmore: w * w,
            hawking: p.hawking_mass(rho),
        }
    }

    pub fn levelset_sample(&self, t: f64) -> Result<LevelSetSample> {
        let rho = self.level_radius(t)?;
        Ok(self.sample_at_radius(rho, t))
    }

    /// ∫_a^b h(ρ) dρ for a >= rho0 and b possibly infinite. Uses ρ = a/y, or
    /// ρ = a/(1 - σ²) when `a` is a horizon boundary. `h` may carry a 1/w
    /// factor. Errors of inner quadratures are folded in through `inner_rel`,
    /// the largest relative error `h` reports.
    pub(crate) fn radial_integral<F>(&self, a: f64, b: f64, mut h: F) -> Result<Estimate>
    where
        F: FnMut(f64, &Cell<f64>) -> Result<f64>,
    {
        if !(a >= self.rho0() && b > a) {
            return Err(Error::Domain(format!("empty or invalid radial interval [{a}, {b}]")));
        }
        let inner_rel = Cell::new(0.0f64);
        let singular = self.singular && a <= self.rho0() * (1.0 + 1e-14);
        let brk = self.profile.breaks_between(a, b);
        let q = if singular {
            let smax = if b.is_infinite() { 1.0 } else { (1.0 - a / b).sqrt() };
            integrate_fallible(
                |s| {
                    let y = 1.0 - s * s;
                    let rho = a / y;
                    Ok(h(rho, &inner_rel)? * 2.0 * a * s / (y * y))
                },
                &chart_points(0.0, smax, brk.map(|r| (1.0 - a / r).sqrt())),
                &self.quad,
            )?
        } else {
            let ylo = if b.is_infinite() { 0.0 } else { a / b };
            integrate_fallible(
                |y| {
                    let rho = a / y;
                    Ok(h(rho, &inner_rel)? * a / (y * y))
                },
                &chart_points(ylo, 1.0, brk.map(|r| a / r)),
                &self.quad,
            )?
        };
        Ok(Estimate::new(q.value, q.err + 4.0 * inner_rel.get() * q.abs))
    }

    /// Relative capacity and geometry of the annulus (rho_a, rho_b).
    pub fn relative_capacity(&self, rho_a: f64, rho_b: f64) -> Result<AnnulusData> {
        if !(rho_a >= self.rho0()) || !(rho_b > rho_a) {
            return Err(Error::Domain(format!(
                "annulus needs rho0 <= rho_a < rho_b, got ({rho_a}, {rho_b})"
            )));
        }
        let p = &self.profile;
        let j = self.radial_integral(rho_a, rho_b, |r, _| Ok(1.0 / (r * r * p.lapse(r))))?;
        let cap = Estimate::new(1.0 / j.value, j.err / (j.value * j.value));
        let energy = Estimate::new(
            4.0 * PI * cap.value * cap.value / (rho_a * rho_a),
            8.0 * PI * cap.value * cap.err / (rho_a * rho_a),
        );
        let (distance, volume) = if rho_b.is_infinite() {
            (Estimate::exact(f64::INFINITY), Estimate::exact(f64::INFINITY))
        } else {
            let singular = self.singular && rho_a <= self.rho0() * (1.0 + 1e-14);
            let along = |f: &dyn Fn(f64) -> f64| -> Result<Estimate> {
                let brk = p.breaks_between(rho_a, rho_b);
                let q = if singular {
                    integrate_points(
                        |s| {
                            let r = rho_a + s * s;
                            f(r) * 2.0 * s / p.lapse(r)
                        },
                        &chart_points(0.0, (rho_b - rho_a).sqrt(), brk.map(|r| (r - rho_a).sqrt())),
                        &self.quad,
                    )?
                } else {
                    integrate_points(|r| f(r) / p.lapse(r), &chart_points(rho_a, rho_b, brk), &self.quad)?
                };
                Ok(q.estimate())
            };
            let l = along(&|_| 1.0)?;
            let v = along(&|r| 4.0 * PI * r * r)?;
            (l, v)
        };
        Ok(AnnulusData {
            rho_a,
            rho_b,
            capacity: cap,
            boundary_energy: energy,
            distance,
            volume,
        })
    }

    /// Normalised Dirichlet energy (1/4π)∫|∇f|² = ∫ f'² w ρ² dρ.
    pub fn dirichlet_energy(&self, f: &RadialTestFunction) -> Result<Estimate> {
        let rho0 = self.rho0();
        let f0 = (f.f)(rho0);
        let far = (f.f)(1e16 * rho0);
        if f0.abs() > 1e-12 || (far - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "test function must vanish on the boundary and tend to 1, got f(rho0) = {f0}, f(far) = {far}"
            )));
        }
        let p = &self.profile;
        let mut cuts = vec![rho0];
        cuts.extend(f.breaks.iter().copied().filter(|&b| b > rho0));
        let end = f.support_end.unwrap_or(f64::INFINITY);
        if end.is_finite() {
            cuts.retain(|&b| b < end);
        }
        cuts.push(end);
        let mut total = Estimate::exact(0.0);
        for w in cuts.windows(2) {
            let piece = self.radial_integral(w[0], w[1], |r, _| {
                let d = (f.f_prime)(r);
                Ok(d * d * p.lapse(r) * r * r)
            })?;
            total = Estimate::new(total.value + piece.value, total.err + piece.err);
        }
        Ok(total)
    }
}

/// An admissible radial test function: f(rho0) = 0, f → 1 at infinity.
#[derive(Clone)]
pub struct RadialTestFunction {
    pub f: RadialFn,
    pub f_prime: RadialFn,
    /// Points where f' may jump.
    pub breaks: Vec<f64>,
    /// f is constant beyond this radius.
    pub support_end: Option<f64>,
}

impl RadialTestFunction {
    /// The capacitary function itself.
    pub fn capacitary(pot: &Potential) -> Self {
        let pot = Arc::new(pot.clone());
        let pp = pot.clone();
        let c = pot.capacity().value;
        Self {
            f: Arc::new(move |r| pp.u(r).map(|e| e.value).unwrap_or(f64::NAN)),
            f_prime: Arc::new(move |r| c / (r * r * pot.profile().lapse(r))),
            breaks: Vec::new(),
            support_end: None,
        }
    }

    /// 1 - (rho0/ρ)^alpha. The energy is finite for alpha > 1/2, but the
    /// integrand is only bounded at infinity for alpha >= 1.
    pub fn power(rho0: f64, alpha: f64) -> Self {
        Self {
            f: Arc::new(move |r| 1.0 - (rho0 / r).powf(alpha)),
            f_prime: Arc::new(move |r| alpha * (rho0 / r).powf(alpha) / r),
            breaks: Vec::new(),
            support_end: None,
        }
    }

    /// dist(Σ, ·)/L, cut off at 1: the distance ramp over a collar of width L.
    pub fn distance_ramp(pot: &Potential, width: f64) -> Result<Self> {
        let p = pot.profile().clone();
        let rho0 = p.rho0();
        let dist = {
            let pot = pot.clone();
            move |r: f64| -> Result<f64> {
                if r <= rho0 {
                    return Ok(0.0);
                }
                let a = pot.relative_capacity(rho0, r)?;
                Ok(a.distance.value)
            }
        };
        let mut hi = rho0 + width;
        while dist(hi)? < width {
            hi = rho0 + 2.0 * (hi - rho0);
        }
        let rb = brent(|r| Ok(dist(r)? - width), rho0, hi, 1e-14 * hi, 200)?;
        let d2 = dist.clone();
        let p2 = p.clone();
        Ok(Self {
            f: Arc::new(move |r| {
                if r >= rb {
                    1.0
                } else {
                    d2(r).map(|d| d / width).unwrap_or(f64::NAN)
                }
            }),
            f_prime: Arc::new(move |r| if r >= rb { 0.0 } else { 1.0 / (width * p2.lapse(r)) }),
            breaks: vec![rb],
            support_end: Some(rb),
        })
    }
}

pub fn capacity(profile: &MassProfile, q: &QuadratureSpec) -> Result<Estimate> {
    Ok(Potential::new(profile, *q)?.capacity())
}

pub fn potential_u(profile: &MassProfile, rho: f64, q: &QuadratureSpec) -> Result<Estimate> {
    Potential::new(profile, *q)?.u(rho)
}

pub fn level_radius(profile: &MassProfile, t: f64, q: &QuadratureSpec) -> Result<f64> {
    Potential::new(profile, *q)?.level_radius(t)
}

pub fn levelset_sample(profile: &MassProfile, t: f64, q: &QuadratureSpec) -> Result<LevelSetSample> {
    Potential::new(profile, *q)?.levelset_sample(t)
}

pub fn relative_capacity(profile: &MassProfile, rho_a: f64, rho_b: f64, q: &QuadratureSpec) -> Result<AnnulusData> {
    Potential::new(profile, *q)?.relative_capacity(rho_a, rho_b)
}

pub fn dirichlet_energy(profile: &MassProfile, f: &RadialTestFunction, q: &QuadratureSpec) -> Result<Estimate> {
    Potential::new(profile, *q)?.dirichlet_energy(f)
}
