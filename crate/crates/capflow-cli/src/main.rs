//! capflow: batch runner for capacity/mass verification scenarios.
//!
//! Exit codes: 0 clean, 2 violations found, 3 numerical failure, 4 bad
//! configuration or arguments.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{ensure, Context as _, Result};
use capflow_core::inequalities::photon_sphere;
use capflow_core::metric::{build_flat, build_schwarzschild};
use capflow_core::{Potential, QuadratureSpec};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::Plan;
use output::{fmt_f64, write_csv, write_json, Num};
use run::{Command, Outcome, Report, SCHEMA_VERSION};

const EXIT_VIOLATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(
    name = "capflow",
    version,
    about = "Verify capacity and mass inequalities on radial profiles"
)]
struct Cli {
    /// Output directory. CAPFLOW_OUT overrides it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the sweep (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Multiplies every verdict and identity tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate, compute capacity, run the check catalog and identities.
    Report { config: PathBuf },
    /// Tabulate the monotone quantities on the configured t-grid.
    Monotone { config: PathBuf },
    /// Closed-form Schwarzschild table with the photon-sphere row.
    SchwarzschildTable {
        #[arg(long, allow_hyphen_values = true)]
        mass: f64,
        /// Isotropic radii, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
    /// Run the identity catalog only.
    VerifyIdentities { config: PathBuf },
}

/// Failure tagged with its exit code.
struct Fail(u8, anyhow::Error);

fn config_err(e: anyhow::Error) -> Fail {
    Fail(EXIT_CONFIG, e)
}

fn numerical_err(e: anyhow::Error) -> Fail {
    Fail(EXIT_NUMERICAL, e)
}

fn out_dir(flag: Option<&Path>, from_config: Option<&Path>) -> PathBuf {
    match std::env::var_os("CAPFLOW_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag
            .or(from_config)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("capflow-out")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Fail> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(config_err(anyhow::anyhow!("--workers must be at least 1")));
        }
    }
    match &cli.cmd {
        Cmd::Report { config } => sweep(cli, config, Command::Report),
        Cmd::Monotone { config } => sweep(cli, config, Command::Monotone),
        Cmd::VerifyIdentities { config } => sweep(cli, config, Command::VerifyIdentities),
        Cmd::SchwarzschildTable { mass, radii } => schwarzschild_table(cli, *mass, radii),
    }
}

fn run_all(plan: &Plan, cmd: Command, workers: Option<usize>) -> Result<Vec<Outcome>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| plan.points.par_iter().map(|p| run::run_point(plan, p, cmd)).collect()))
}

fn sweep(cli: &Cli, path: &Path, cmd: Command) -> Result<u8, Fail> {
    let plan = config::load(path, cli.tol_scale).map_err(config_err)?;
    let dir = out_dir(cli.out.as_deref(), plan.out_dir.as_deref());
    let outcomes = run_all(&plan, cmd, cli.workers).map_err(numerical_err)?;
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(numerical_err)?;
    write_outputs(&plan, cmd, &outcomes, &dir).map_err(numerical_err)?;

    let failed = outcomes.iter().filter(|o| o.report.error.is_some()).count();
    let violated = outcomes.iter().filter(|o| !o.report.violations.is_empty()).count();
    for o in &outcomes {
        if let Some(e) = &o.report.error {
            eprintln!("profile {} ({}): {e}", o.report.index, o.report.label);
        }
    }
    println!(
        "{}: {} profiles, {violated} with violations, {failed} failed; output in {}",
        cmd.name(),
        outcomes.len(),
        dir.display()
    );
    Ok(if failed > 0 {
        EXIT_NUMERICAL
    } else if violated > 0 {
        EXIT_VIOLATION
    } else {
        0
    })
}

fn write_outputs(plan: &Plan, cmd: Command, outcomes: &[Outcome], dir: &Path) -> Result<()> {
    let label = |o: &Outcome| {
        let p = &plan.points[o.report.index];
        vec![
            o.report.index.to_string(),
            p.family.name().to_string(),
            p.params_label(),
        ]
    };
    let mut verdict_rows = Vec::new();
    let mut identity_rows = Vec::new();
    for o in outcomes {
        for v in &o.report.verdicts {
            let mut row = label(o);
            row.extend([
                v.id.clone(),
                fmt_f64(v.lhs.0),
                fmt_f64(v.rhs.0),
                fmt_f64(v.slack.0),
                fmt_f64(v.tolerance.0),
                v.status.to_string(),
                v.note.clone().unwrap_or_default(),
            ]);
            verdict_rows.push(row);
        }
        for r in &o.report.identities {
            let mut row = label(o);
            row.extend([
                r.identity.to_string(),
                fmt_f64(r.t1.0),
                fmt_f64(r.t2.0),
                fmt_f64(r.lhs.value.0),
                fmt_f64(r.lhs.err.0),
                fmt_f64(r.rhs.value.0),
                fmt_f64(r.rhs.err.0),
                fmt_f64(r.residual.0),
                fmt_f64(r.tolerance.0),
                r.pass.to_string(),
            ]);
            identity_rows.push(row);
        }
        if cmd == Command::Monotone {
            let rows: Vec<Vec<String>> = o
                .monotone
                .iter()
                .map(|r| {
                    [
                        r.t,
                        r.rho,
                        r.a.value,
                        r.b.value,
                        r.cal_a.value,
                        r.cal_b.value,
                        r.f.value,
                        r.psi.value,
                    ]
                    .map(fmt_f64)
                    .to_vec()
                })
                .collect();
            let name = format!("monotone_{:03}.csv", o.report.index);
            write_csv(
                &dir.join(name),
                &["t", "rho", "A", "B", "calA", "calB", "F", "Psi"],
                &rows,
            )?;
        }
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: cmd.name(),
        name: plan.name.as_deref(),
        seed: plan.seed,
        safety: Num(plan.safety),
        profiles: outcomes.iter().map(|o| &o.report).collect(),
    };
    write_json(&dir.join("report.json"), &report)?;
    let head = ["profile", "family", "params"];
    if cmd == Command::Report {
        let cols = [&head[..], &["id", "lhs", "rhs", "slack", "tolerance", "status", "note"]].concat();
        write_csv(&dir.join("verdicts.csv"), &cols, &verdict_rows)?;
    }
    if matches!(cmd, Command::Report | Command::VerifyIdentities) {
        let cols = [
            &head[..],
            &[
                "identity",
                "t1",
                "t2",
                "lhs",
                "lhs_err",
                "rhs",
                "rhs_err",
                "residual",
                "tolerance",
                "pass",
            ],
        ]
        .concat();
        write_csv(&dir.join("identities.csv"), &cols, &identity_rows)?;
    }
    Ok(())
}

/// One row of the Schwarzschild table at isotropic radius r.
fn table_row(kind: &str, m: f64, r: f64) -> Result<Vec<String>> {
    let k = 1.0 + m / (2.0 * r);
    let rho = r * k * k;
    let profile = if m == 0.0 {
        build_flat(rho)?
    } else {
        build_schwarzschild(m, rho)?
    };
    let pot = Potential::new(&profile, QuadratureSpec::default())?;
    let c = pot.capacity().value;
    let h = profile.mean_curvature(rho);
    Ok(vec![
        kind.to_string(),
        fmt_f64(r),
        fmt_f64(rho),
        fmt_f64(c),
        fmt_f64(r + 0.5 * m),
        fmt_f64(m / c),
        fmt_f64(h),
        fmt_f64(m * h),
    ])
}

fn schwarzschild_table(cli: &Cli, m: f64, radii: &[f64]) -> Result<u8, Fail> {
    (|| {
        ensure!(m.is_finite() && m >= 0.0, "--mass must be nonnegative, got {m}");
        for &r in radii {
            // Below m/2 the isotropic chart covers the other sheet.
            ensure!(
                r.is_finite() && r > 0.0 && r >= 0.5 * m,
                "radius {r} must be positive and at least m/2"
            );
        }
        Ok(())
    })()
    .map_err(config_err)?;

    let mut rows = Vec::with_capacity(radii.len() + 1);
    for &r in radii {
        rows.push(table_row("row", m, r).map_err(numerical_err)?);
    }
    if m > 0.0 {
        let (rp, _) = photon_sphere(m).map_err(|e| numerical_err(e.into()))?;
        rows.push(table_row("photon-sphere", m, rp).map_err(numerical_err)?);
    }
    let header = ["kind", "r", "rho", "c_r", "c_r_closed", "q", "H", "mH"];
    let dir = out_dir(cli.out.as_deref(), None);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(numerical_err)?;
    write_csv(&dir.join("schwarzschild_table.csv"), &header, &rows).map_err(numerical_err)?;
    println!("{}", header.join(","));
    for r in &rows {
        println!("{}", r.join(","));
    }
    Ok(0)
}
