//! Scenario configuration and sweep expansion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context as _, Result};
use capflow_core::functionals::{t_grid, Identity, TSpacing};
use capflow_core::inequalities::{CheckId, DEFAULT_SAFETY};
use capflow_core::metric::{
    build_bump, build_flat, build_polytail, build_schwarzschild, build_spline, from_conformal_radial,
    ConformalRadialFactor,
};
use capflow_core::{MassProfile, QuadratureSpec};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub sweeps: Vec<Sweep>,
    #[serde(default)]
    pub t_grid: TGrid,
    #[serde(default)]
    pub checks: Selection,
    #[serde(default)]
    pub identities: Selection,
    /// Explicit (t1, t2) pairs; otherwise `identity_samples` random pairs.
    #[serde(default)]
    pub identity_pairs: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_samples")]
    pub identity_samples: usize,
    #[serde(default)]
    pub annuli: Vec<Annulus>,
    /// Deformation parameters for the transformed checks.
    #[serde(default)]
    pub conformal_k: Vec<f64>,
    #[serde(default)]
    pub tolerance: Tolerance,
    #[serde(default)]
    pub output: Output,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub family: Family,
    #[serde(default)]
    pub params: BTreeMap<String, Values>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Flat,
    Schwarzschild,
    Polytail,
    Spline,
    Bump,
    Conformal,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Flat => "flat",
            Family::Schwarzschild => "schwarzschild",
            Family::Polytail => "polytail",
            Family::Spline => "spline",
            Family::Bump => "bump",
            Family::Conformal => "conformal",
        }
    }

    /// (required, optional) parameter names.
    fn params(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Family::Flat => (&["rho0"], &[]),
            // Either rho0 or the isotropic radius r.
            Family::Schwarzschild => (&["m"], &["rho0", "r"]),
            Family::Polytail => (&["m", "p", "rho0"], &[]),
            Family::Spline => (&["m", "rho0"], &["knots", "seed"]),
            Family::Bump => (&["m", "rho0", "height", "center", "width"], &[]),
            Family::Conformal => (&["a", "b", "r0"], &[]),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn list(&self) -> Vec<f64> {
        match self {
            Values::One(v) => vec![*v],
            Values::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for TGrid {
    fn default() -> Self {
        Self {
            count: 64,
            spacing: Spacing::GeometricTowards1,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Uniform,
    #[serde(rename = "geometric-towards-1", alias = "geometric")]
    GeometricTowards1,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Selection {
    All(String),
    Ids(Vec<String>),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::All("all".into())
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
    /// Radii are multiples of rho0 rather than absolute.
    #[serde(default)]
    pub relative: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub safety: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_depth: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
}

/// One sweep point, ready to run.
#[derive(Clone, Debug)]
pub struct Point {
    pub index: usize,
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    pub profile: MassProfile,
}

impl Point {
    pub fn params_label(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Everything a command needs, validated.
pub struct Plan {
    pub name: Option<String>,
    pub points: Vec<Point>,
    pub ts: Vec<f64>,
    pub checks: Vec<CheckId>,
    pub identities: Vec<Identity>,
    pub identity_pairs: Option<Vec<(f64, f64)>>,
    pub identity_samples: usize,
    pub annuli: Vec<Annulus>,
    pub conformal_k: Vec<f64>,
    pub safety: f64,
    pub quad: QuadratureSpec,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

pub fn load(path: &Path, tol_scale: f64) -> Result<Plan> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: ScenarioConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    plan(cfg, tol_scale)
}

pub fn plan(cfg: ScenarioConfig, tol_scale: f64) -> Result<Plan> {
    ensure!(
        tol_scale.is_finite() && tol_scale > 0.0,
        "--tol-scale must be positive, got {tol_scale}"
    );
    ensure!(!cfg.sweeps.is_empty(), "config has no sweeps");
    ensure!(cfg.t_grid.count >= 2, "t_grid.count must be at least 2");

    let mut points = Vec::new();
    for sweep in &cfg.sweeps {
        for params in expand(sweep)? {
            let profile = build(sweep.family, &params, cfg.seed)
                .with_context(|| format!("{} with {params:?}", sweep.family.name()))?;
            points.push(Point {
                index: points.len(),
                family: sweep.family,
                params,
                profile,
            });
        }
    }
    ensure!(!points.is_empty(), "sweep is empty");

    let spacing = match cfg.t_grid.spacing {
        Spacing::Uniform => TSpacing::Uniform,
        Spacing::GeometricTowards1 => TSpacing::Geometric,
    };
    let ts = t_grid(cfg.t_grid.count, spacing);

    let checks = match &cfg.checks {
        Selection::All(s) if s == "all" => CheckId::catalog(),
        Selection::All(s) => bail!("checks must be \"all\" or a list, got \"{s}\""),
        Selection::Ids(ids) => ids
            .iter()
            .map(|s| s.parse::<CheckId>().map_err(anyhow::Error::from))
            .collect::<Result<_>>()?,
    };
    for c in &checks {
        if let CheckId::BdryIneq(t) = c {
            ensure!((0.0..1.0).contains(t), "bdry-ineq level {t} outside [0, 1)");
        }
    }
    let identities = match &cfg.identities {
        Selection::All(s) if s == "all" => Identity::ALL.to_vec(),
        Selection::All(s) => bail!("identities must be \"all\" or a list, got \"{s}\""),
        Selection::Ids(ids) => ids
            .iter()
            .map(|s| s.parse::<Identity>().map_err(anyhow::Error::from))
            .collect::<Result<_>>()?,
    };
    let identity_pairs = match &cfg.identity_pairs {
        Some(pairs) => {
            for &[a, b] in pairs {
                ensure!(
                    0.0 <= a && a < b && b < 1.0,
                    "identity pair ({a}, {b}) needs 0 <= t1 < t2 < 1"
                );
            }
            Some(pairs.iter().map(|&[a, b]| (a, b)).collect())
        }
        None => None,
    };
    for a in &cfg.annuli {
        ensure!(
            a.inner > 0.0 && a.outer > a.inner,
            "annulus ({}, {}) is empty",
            a.inner,
            a.outer
        );
    }
    for &k in &cfg.conformal_k {
        ensure!(k > 0.0 && k.is_finite(), "conformal k must be positive, got {k}");
    }

    let base = cfg.tolerance.safety.unwrap_or(DEFAULT_SAFETY);
    ensure!(base > 0.0 && base.is_finite(), "tolerance.safety must be positive");
    let mut quad = QuadratureSpec::default();
    if let Some(r) = cfg.tolerance.rel_tol {
        quad.rel_tol = r;
    }
    if let Some(a) = cfg.tolerance.abs_tol {
        quad.abs_tol = a;
    }
    if let Some(d) = cfg.tolerance.max_depth {
        quad.max_depth = d;
    }
    quad.validate()?;

    Ok(Plan {
        name: cfg.name,
        points,
        ts,
        checks,
        identities,
        identity_pairs,
        identity_samples: cfg.identity_samples,
        annuli: cfg.annuli,
        conformal_k: cfg.conformal_k,
        safety: base * tol_scale,
        quad,
        out_dir: cfg.output.dir,
        seed: cfg.seed,
    })
}

/// Cartesian product of the parameter lists, in key order.
fn expand(sweep: &Sweep) -> Result<Vec<BTreeMap<String, f64>>> {
    let (required, optional) = sweep.family.params();
    for k in sweep.params.keys() {
        ensure!(
            required.contains(&k.as_str()) || optional.contains(&k.as_str()),
            "unknown parameter '{k}' for family {}",
            sweep.family.name()
        );
    }
    for r in required {
        ensure!(
            sweep.params.contains_key(*r),
            "family {} needs parameter '{r}'",
            sweep.family.name()
        );
    }
    let mut out = vec![BTreeMap::new()];
    for (k, v) in &sweep.params {
        let vals = v.list();
        ensure!(!vals.is_empty(), "parameter '{k}' has no values");
        ensure!(
            vals.iter().all(|x| x.is_finite()),
            "parameter '{k}' has a non-finite value"
        );
        out = out
            .into_iter()
            .flat_map(|m| {
                vals.iter().map(move |&x| {
                    let mut m = m.clone();
                    m.insert(k.clone(), x);
                    m
                })
            })
            .collect();
    }
    Ok(out)
}

fn build(family: Family, p: &BTreeMap<String, f64>, seed: u64) -> Result<MassProfile> {
    let g = |k: &str| p[k];
    let profile = match family {
        Family::Flat => build_flat(g("rho0"))?,
        Family::Schwarzschild => {
            let m = g("m");
            let rho0 = match (p.get("rho0"), p.get("r")) {
                (Some(&rho0), None) => rho0,
                (None, Some(&r)) => {
                    ensure!(r > 0.0, "isotropic radius must be positive");
                    let k = 1.0 + m / (2.0 * r);
                    r * k * k
                }
                _ => bail!("schwarzschild needs exactly one of rho0, r"),
            };
            build_schwarzschild(m, rho0)?
        }
        Family::Polytail => build_polytail(g("m"), g("p"), g("rho0"))?,
        Family::Spline => {
            let knots = p.get("knots").copied().unwrap_or(8.0);
            ensure!(knots >= 2.0 && knots.fract() == 0.0, "knots must be an integer >= 2");
            let s = p.get("seed").copied().unwrap_or(seed as f64);
            ensure!(s >= 0.0 && s.fract() == 0.0, "seed must be a nonnegative integer");
            build_spline(g("m"), g("rho0"), knots as usize, s as u64)?
        }
        Family::Bump => build_bump(g("m"), g("rho0"), g("height"), g("center"), g("width"))?,
        Family::Conformal => from_conformal_radial(ConformalRadialFactor::poly(g("a"), g("b"), g("r0")))?,
    };
    Ok(profile)
}
