//! Command-line front end. Reports go to stdout as JSON; data files are only
//! written under an explicit `--out` directory.
//!
//! Exit codes: 0 success, 1 mathematical negative (verdict false or solver
//! failure), 2 usage or configuration error.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Error;
use crate::hypothesis::{check_theorem, HypothesisReport};
use crate::integrate::{csv_number, drift_report, integrate, Drift, ToleranceSettings, Trajectory};
use crate::orbits::{continue_family, sample_orbit, solve_orbit, OrbitFamily, OrbitProblem, PeriodicOrbit};
use crate::system::verify_poisson_realization;
use crate::StateVector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "orbitkit", version, about = "Periodic orbits near equilibria of systems with conserved quantities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for data files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Shooting convergence threshold.
    #[arg(long, global = true)]
    pub tol_orbit: Option<f64>,
    /// Integrator tolerance (absolute and relative).
    #[arg(long, global = true)]
    pub tol_ode: Option<f64>,
    /// Also write CSV data (requires --out).
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the existence hypotheses at the configured equilibrium.
    Check,
    /// Solve for one periodic orbit per frequency and epsilon.
    FindOrbit {
        #[arg(long)]
        skip_check: bool,
        /// Samples per period in the orbit CSV.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Continue orbit families over the configured epsilons.
    Continue,
    /// Integrate from the configured state and report conserved-quantity drift.
    Integrate {
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
    },
    /// Check the Hamilton-Poisson identities of the rigid body at random points.
    VerifyRealization {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

/// A failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("cannot write {}: {e}", path.display()))
}

/// Maps a library error to the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::AlphaUndefined
        | Error::NoInertiaRealization(_)
        | Error::NotAnEquilibrium(_)
        | Error::NotConserved { .. } => EXIT_USAGE,
        _ => EXIT_NEGATIVE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let c = &cli.common;
    if c.csv && c.out.is_none() {
        return Err(usage("--csv requires --out"));
    }
    let path = c.config.as_ref().ok_or_else(|| usage("--config is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(t) = c.tol_orbit {
        if !(t > 0.0) {
            return Err(usage("--tol-orbit must be positive"));
        }
        cfg.solver.tol_orbit = t;
    }
    if let Some(t) = c.tol_ode {
        let ode = ToleranceSettings { method: cfg.solver.ode.method, ..ToleranceSettings::with_tol(t) };
        ode.validate().map_err(|_| usage("--tol-ode must be positive"))?;
        cfg.solver.ode = ode;
    }
    match &cli.command {
        Command::Check => cmd_check(&cfg, stdout),
        Command::FindOrbit { skip_check, samples } => cmd_find_orbit(&cfg, c, *skip_check, *samples, stdout),
        Command::Continue => cmd_continue(&cfg, c, stdout),
        Command::Integrate { t_end } => cmd_integrate(&cfg, c, *t_end, stdout),
        Command::VerifyRealization { samples } => cmd_verify_realization(&cfg, c.seed, *samples, stdout),
    }
}

fn emit<T: Serialize>(stdout: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(stdout, "{text}").map_err(|e| usage(format!("cannot write to stdout: {e}")))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| io_failure(&path, e))
}

fn run_check(cfg: &RunConfig) -> Result<HypothesisReport, Failure> {
    let e = cfg.require_equilibrium()?;
    Ok(check_theorem(&cfg.bundle, e.as_slice(), &cfg.check)?)
}

fn cmd_check(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let report = run_check(cfg)?;
    emit(stdout, &report)?;
    Ok(if report.verdict { EXIT_OK } else { EXIT_NEGATIVE })
}

/// Indices of the frequencies to solve for.
fn selected_omegas(cfg: &RunConfig, report: &HypothesisReport) -> Result<Vec<(usize, f64)>, Failure> {
    if report.omegas.is_empty() {
        return Err(Failure { code: EXIT_NEGATIVE, message: "linearization has no imaginary eigenvalue pair".into() });
    }
    match cfg.omega_index {
        Some(i) if i >= report.omegas.len() => Err(usage(format!(
            "config field `omega_index`: {i} out of range ({} frequencies)",
            report.omegas.len()
        ))),
        Some(i) => Ok(vec![(i, report.omegas[i])]),
        None => Ok(report.omegas.iter().copied().enumerate().collect()),
    }
}

fn validated_epsilons(eps: &[f64]) -> Result<(), Failure> {
    if eps.is_empty() {
        return Err(usage("config field `epsilons` must be nonempty"));
    }
    if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(usage("config field `epsilons` must hold positive values"));
    }
    Ok(())
}

fn seed_angle(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).random_range(0.0..PI)
}

/// `max |Q(x(t)) - Q(x(0))|` over a sampled period.
fn along_orbit(cfg: &RunConfig, orbit: &PeriodicOrbit, samples: usize) -> Result<(Vec<Drift>, Trajectory), Failure> {
    let traj = sample_orbit(&cfg.bundle, orbit, samples, &cfg.solver.ode)?;
    Ok((drift_report(&traj, cfg.bundle.quantities()), traj))
}

#[derive(Serialize)]
struct OrbitRecord {
    omega_index: usize,
    omega: f64,
    epsilon: f64,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit: Option<PeriodicOrbit>,
    /// Drift of each conserved quantity over the sampled period.
    #[serde(skip_serializing_if = "Option::is_none")]
    drift_along_orbit: Option<Vec<Drift>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct FindOrbitOutput<'a> {
    system: &'a str,
    equilibrium: Vec<f64>,
    seed_angle: f64,
    orbits: Vec<OrbitRecord>,
}

fn cmd_find_orbit(
    cfg: &RunConfig,
    c: &Common,
    skip_check: bool,
    samples: usize,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    if samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let e = cfg.require_equilibrium()?.clone();
    let report = run_check(cfg)?;
    if !skip_check && !report.verdict {
        emit(stdout, &report)?;
        return Err(Failure { code: EXIT_NEGATIVE, message: "hypotheses not satisfied; see report".into() });
    }
    let omegas = selected_omegas(cfg, &report)?;
    let epsilons = cfg.epsilons.clone().unwrap_or_else(|| vec![0.05]);
    validated_epsilons(&epsilons)?;
    let angle = seed_angle(c.seed);

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &(i, omega) in &omegas {
        for &eps in &epsilons {
            let problem = OrbitProblem::new(cfg.bundle.clone(), e.clone(), omega, eps, cfg.solver)?.with_seed_angle(angle);
            match solve_orbit(&problem) {
                Ok(orbit) => {
                    let (drift, traj) = along_orbit(cfg, &orbit, samples)?;
                    if let Some(dir) = &c.out {
                        let stem = format!("orbit_omega{i}_eps{eps}");
                        let json = serde_json::to_vec_pretty(&orbit).expect("orbit serializes");
                        write_file(dir, &format!("{stem}.json"), &json)?;
                        if c.csv {
                            let mut buf = Vec::new();
                            traj.write_csv(&mut buf).expect("writing to memory");
                            write_file(dir, &format!("{stem}.csv"), &buf)?;
                        }
                    }
                    records.push(OrbitRecord {
                        omega_index: i,
                        omega,
                        epsilon: eps,
                        converged: true,
                        orbit: Some(orbit),
                        drift_along_orbit: Some(drift),
                        error: None,
                    });
                }
                Err(err) => {
                    failures.push(format!("omega {omega}, epsilon {eps}: {err}"));
                    records.push(OrbitRecord {
                        omega_index: i,
                        omega,
                        epsilon: eps,
                        converged: false,
                        orbit: None,
                        drift_along_orbit: None,
                        error: Some(err.to_string()),
                    });
                }
            }
        }
    }
    emit(
        stdout,
        &FindOrbitOutput { system: &cfg.bundle.name, equilibrium: e.iter().copied().collect(), seed_angle: angle, orbits: records },
    )?;
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(Failure { code: EXIT_NEGATIVE, message: failures.join("; ") })
    }
}

fn family_csv(family: &OrbitFamily) -> Vec<u8> {
    let mut rows: Vec<(f64, String)> = family
        .rows
        .iter()
        .map(|r| {
            let o = &r.orbit;
            let level = o.constraint_residuals.iter().map(|v| v.value).fold(0.0, f64::max);
            let line = format!(
                "{},converged,{},{},{},{},{}",
                csv_number(r.epsilon),
                csv_number(o.period),
                csv_number(o.period_deviation()),
                csv_number(o.closure_residual),
                csv_number(level),
                o.iterations
            );
            (r.epsilon, line)
        })
        .collect();
    rows.extend(family.failures.iter().map(|f| (f.epsilon, format!("{},failed,,,,,", csv_number(f.epsilon)))));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = String::from("epsilon,status,period,period_deviation,closure_residual,level_residual,iterations\n");
    for (_, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Serialize)]
struct ContinueOutput<'a> {
    system: &'a str,
    equilibrium: Vec<f64>,
    families: Vec<FamilyRecord>,
}

#[derive(Serialize)]
struct FamilyRecord {
    omega_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<OrbitFamily>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_continue(cfg: &RunConfig, c: &Common, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let e = cfg.require_equilibrium()?.clone();
    let epsilons = cfg.epsilons.clone().ok_or_else(|| usage("config field `epsilons` is required"))?;
    validated_epsilons(&epsilons)?;
    if epsilons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("config field `epsilons` must be strictly increasing"));
    }
    let report = run_check(cfg)?;
    let omegas = selected_omegas(cfg, &report)?;
    let angle = seed_angle(c.seed);

    let templates = omegas
        .iter()
        .map(|&(_, omega)| {
            OrbitProblem::new(cfg.bundle.clone(), e.clone(), omega, epsilons[0], cfg.solver)
                .map(|p| p.with_seed_angle(angle))
        })
        .collect::<Result<Vec<_>, _>>()?;

    // families are independent; results are joined in frequency order
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = templates
            .iter()
            .map(|t| s.spawn(|| continue_family(t, &epsilons)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("continuation thread panicked")).collect()
    });

    let mut families = Vec::new();
    let mut negative = Vec::new();
    for (&(i, _), result) in omegas.iter().zip(results) {
        match result {
            Ok(family) => {
                if let Some(dir) = &c.out {
                    let json = serde_json::to_vec_pretty(&family).expect("family serializes");
                    write_file(dir, &format!("family_omega{i}.json"), &json)?;
                    write_file(dir, &format!("family_omega{i}.csv"), &family_csv(&family))?;
                }
                families.push(FamilyRecord { omega_index: i, family: Some(family), error: None });
            }
            Err(err) => {
                negative.push(format!("omega index {i}: {err}"));
                families.push(FamilyRecord { omega_index: i, family: None, error: Some(err.to_string()) });
            }
        }
    }
    emit(stdout, &ContinueOutput { system: &cfg.bundle.name, equilibrium: e.iter().copied().collect(), families })?;
    if negative.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(Failure { code: EXIT_NEGATIVE, message: negative.join("; ") })
    }
}

#[derive(Serialize)]
struct IntegrateOutput {
    t_end: f64,
    initial_state: Vec<f64>,
    final_state: Vec<f64>,
    accepted_steps: usize,
    rejected_steps: usize,
    drift: Vec<Drift>,
}

fn cmd_integrate(cfg: &RunConfig, c: &Common, t_end: f64, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let x0: Vec<f64> = match (&cfg.initial_state, &cfg.equilibrium) {
        (Some(x), _) => x.clone(),
        (None, Some(e)) => e.iter().copied().collect(),
        (None, None) => return Err(usage("config needs `initial_state` or `equilibrium` to integrate")),
    };
    let traj = integrate(&cfg.bundle.system, &x0, t_end, &cfg.solver.ode)?;
    if let (Some(dir), true) = (&c.out, c.csv) {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).expect("writing to memory");
        write_file(dir, "trajectory.csv", &buf)?;
    }
    emit(
        stdout,
        &IntegrateOutput {
            t_end,
            final_state: traj.final_state().iter().copied().collect(),
            initial_state: x0,
            accepted_steps: traj.step_stats.accepted,
            rejected_steps: traj.step_stats.rejected,
            drift: drift_report(&traj, cfg.bundle.quantities()),
        },
    )?;
    Ok(EXIT_OK)
}

/// Threshold on both realization residuals.
pub const REALIZATION_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct RealizationOutput {
    seed: u64,
    #[serde(flatten)]
    report: crate::system::RealizationReport,
    passed: bool,
}

fn cmd_verify_realization(cfg: &RunConfig, seed: u64, samples: usize, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let params = cfg
        .rigid_body
        .ok_or_else(|| usage("verify-realization requires the rigid_body system"))?;
    if samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<StateVector> = (0..samples)
        .map(|_| StateVector::from_fn(3, |_, _| rng.random_range(-1.0..=1.0)))
        .collect();
    let report = verify_poisson_realization(&params, &points)?;
    let passed = report.hamiltonian_residual < REALIZATION_TOL && report.casimir_residual < REALIZATION_TOL;
    emit(stdout, &RealizationOutput { seed, report, passed })?;
    Ok(if passed { EXIT_OK } else { EXIT_NEGATIVE })
}
