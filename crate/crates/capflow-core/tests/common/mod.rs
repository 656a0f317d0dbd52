//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use capflow_core::metric::{build_flat, build_polytail, build_schwarzschild};
use capflow_core::{MassProfile, Potential, QuadratureSpec};

/// Romberg integration on [a, b] with 2^levels panels; returns the last two
/// diagonal entries so callers can see the convergence.
pub fn romberg<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, levels: usize) -> (f64, f64) {
    let mut prev: Vec<f64> = vec![0.5 * (b - a) * (f(a) + f(b))];
    let mut last_two = (prev[0], prev[0]);
    for i in 1..=levels {
        let n = 1usize << i;
        let h = (b - a) / n as f64;
        let mid: f64 = (0..n / 2).map(|j| f(a + (2 * j + 1) as f64 * h)).sum();
        let mut row = vec![0.5 * prev[0] + h * mid];
        for k in 1..=i.min(10) {
            let fac = 4f64.powi(k as i32);
            let v = row[k - 1] + (row[k - 1] - prev[k - 1]) / (fac - 1.0);
            row.push(v);
        }
        last_two = (last_two.1, *row.last().unwrap());
        prev = row;
    }
    last_two
}

/// Capacity by Romberg on the chart ρ = ρ0/(1 - σ²), which stays smooth for
/// a horizon boundary: ∫dρ/(ρ²w) = (2/ρ0)∫₀¹ σ/w dσ.
pub fn capacity_oracle(p: &MassProfile, levels: usize) -> f64 {
    let rho0 = p.rho0();
    // dρ = 2ρ0 σ/(1-σ²)² dσ, 1/ρ² = (1-σ²)²/ρ0², so the integrand is 2σ/(ρ0 w).
    let f = |s: f64| {
        if s >= 1.0 {
            return 2.0 / rho0;
        }
        let rho = rho0 / (1.0 - s * s);
        let w = p.lapse(rho);
        if s == 0.0 {
            // σ/w stays finite at a horizon: w ≈ σ sqrt(1 - 2m'(ρ0)) near σ = 0.
            if w == 0.0 {
                return 2.0 / (rho0 * (1.0 - 2.0 * p.mass_prime(rho0)).sqrt());
            }
            return 0.0;
        }
        2.0 * s / (rho0 * w)
    };
    1.0 / romberg(f, 0.0, 1.0, levels).1
}

pub fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

pub fn pot(p: &MassProfile) -> Potential {
    Potential::new(p, quad()).expect("potential")
}

pub fn flat(rho0: f64) -> MassProfile {
    build_flat(rho0).unwrap()
}

pub fn schw(m: f64, rho0: f64) -> MassProfile {
    build_schwarzschild(m, rho0).unwrap()
}

pub fn polytail(m: f64, p: f64, rho0: f64) -> MassProfile {
    build_polytail(m, p, rho0).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Schwarzschild of mass m with isotropic boundary radius r.
pub fn schw_iso(m: f64, r: f64) -> MassProfile {
    let k = 1.0 + m / (2.0 * r);
    schw(m, r * k * k)
}
