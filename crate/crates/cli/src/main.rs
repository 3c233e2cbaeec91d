//! `vcoher`: spectra, group index, bistability curves, harmonic
//! coefficients and the self-validation suite, as CSV on stdout or a file.
//!
//! Exit codes: 0 success, 1 failed check, 2 configuration error,
//! 3 solver failure.

mod config;
mod csv;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use vcoher::bistability::ob_curve;
use vcoher::model::build_liouvillian_parts;
use vcoher::oracle::{compare, time_domain_harmonics, OracleConfig};
use vcoher::response::{group_index, group_index_with_refinement, spectrum};
use vcoher::solver::harmonic_balance;
use vcoher::validate::{render_table, run_suite};

use config::RunConfig;

/// Parameters shared by every computing subcommand. Each key of the config
/// file can be given as a flag of the same name, which takes precedence.
#[derive(Debug, Args)]
struct Common {
    /// Flat JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the merged configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    #[arg(long = "gamma2", value_name = "RATE")]
    gamma2: Option<String>,
    #[arg(long = "gamma3", value_name = "RATE")]
    gamma3: Option<String>,
    #[arg(long = "eta")]
    eta: Option<String>,
    #[arg(long = "omega_c_mag", value_name = "RATE")]
    omega_c_mag: Option<String>,
    #[arg(long = "phi_c", value_name = "RAD")]
    phi_c: Option<String>,
    #[arg(long = "omega_p_mag", value_name = "RATE")]
    omega_p_mag: Option<String>,
    #[arg(long = "phi_p", value_name = "RAD")]
    phi_p: Option<String>,
    #[arg(long = "delta_c", value_name = "RATE", allow_hyphen_values = true)]
    delta_c: Option<String>,
    #[arg(long = "delta", value_name = "RATE", allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long = "kappa")]
    kappa: Option<String>,
    #[arg(long = "w")]
    w: Option<String>,
    #[arg(long = "c_coop")]
    c_coop: Option<String>,
    #[arg(long = "x_to_omega_p")]
    x_to_omega_p: Option<String>,
    #[arg(long = "phase_x", value_name = "RAD", allow_hyphen_values = true)]
    phase_x: Option<String>,
    #[arg(long = "mode")]
    mode: Option<String>,
    #[arg(long = "sweep_variable")]
    sweep_variable: Option<String>,
    #[arg(long = "sweep_start", allow_hyphen_values = true)]
    sweep_start: Option<String>,
    #[arg(long = "sweep_stop", allow_hyphen_values = true)]
    sweep_stop: Option<String>,
    #[arg(long = "sweep_count")]
    sweep_count: Option<String>,
    #[arg(long = "k_max")]
    k_max: Option<String>,
    #[arg(long = "out_path", value_name = "PATH")]
    out_path: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let fields: [(&str, &Option<String>); 21] = [
            ("gamma2", &self.gamma2),
            ("gamma3", &self.gamma3),
            ("eta", &self.eta),
            ("omega_c_mag", &self.omega_c_mag),
            ("phi_c", &self.phi_c),
            ("omega_p_mag", &self.omega_p_mag),
            ("phi_p", &self.phi_p),
            ("delta_c", &self.delta_c),
            ("delta", &self.delta),
            ("kappa", &self.kappa),
            ("w", &self.w),
            ("c_coop", &self.c_coop),
            ("x_to_omega_p", &self.x_to_omega_p),
            ("phase_x", &self.phase_x),
            ("mode", &self.mode),
            ("sweep_variable", &self.sweep_variable),
            ("sweep_start", &self.sweep_start),
            ("sweep_stop", &self.sweep_stop),
            ("sweep_count", &self.sweep_count),
            ("k_max", &self.k_max),
            ("out_path", &self.out_path),
        ];
        fields
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    fn load(&self) -> anyhow::Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        base.with_overrides(&self.overrides())
    }
}

#[derive(Debug, Parser)]
#[command(name = "vcoher", version, about = "Probe response and optical bistability of a V-type atom with decay interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalised probe coherence over a detuning sweep.
    Spectrum(Common),
    /// Group index over a detuning sweep.
    GroupIndex {
        #[command(flatten)]
        common: Common,
        /// Also fail (exit 1) if halving the grid spacing moves any interior value by more than 1e-3.
        #[arg(long)]
        check_refinement: bool,
    },
    /// Cavity input-output curve over the sweep range of x.
    Ob(Common),
    /// Harmonic coefficients of the periodic steady state.
    Floquet {
        #[command(flatten)]
        common: Common,
        /// Compare against the time-domain projection (exit 1 on mismatch).
        #[arg(long)]
        oracle: bool,
        /// Absolute tolerance for the oracle comparison.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write the oracle trajectory as CSV to this path.
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
    },
    /// Run the cross-check suite and print a pass/fail table.
    Validate {
        /// Algebraic checks only.
        #[arg(long)]
        quick: bool,
    },
}

enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Solver(e) => e,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn solver_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Solver(e.into())
}

fn emit(out_path: Option<&str>, text: &str) -> Result<(), Failure> {
    match out_path {
        Some(path) => std::fs::write(Path::new(path), text)
            .with_context(|| format!("cannot write {path}"))
            .map_err(solver_err),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .context("cannot write to stdout")
                .map_err(solver_err)
        }
    }
}

/// Loads the config; returns `None` after handling `--dump-config`.
fn prepare(common: &Common) -> Result<Option<RunConfig>, Failure> {
    let cfg = common.load().map_err(config_err)?;
    if common.dump_config {
        println!("{}", cfg.to_json());
        return Ok(None);
    }
    Ok(Some(cfg))
}

fn cmd_spectrum(common: &Common) -> Outcome {
    let Some(cfg) = prepare(common)? else { return Ok(0) };
    let (p, sweep, mode, scale) = (|| Ok::<_, anyhow::Error>((cfg.system_params()?, cfg.sweep()?, cfg.coherence_mode()?, cfg.scale()?)))()
        .map_err(config_err)?;
    let spec = spectrum(&p, &sweep, mode, &scale).map_err(solver_err)?;
    for (v, e) in &spec.gaps {
        eprintln!("warning: {} = {v} skipped: {e}", sweep.variable.as_str());
    }
    emit(cfg.out_path.as_deref(), &csv::spectrum(&spec.points))?;
    Ok(0)
}

fn cmd_group_index(common: &Common, check_refinement: bool) -> Outcome {
    let Some(cfg) = prepare(common)? else { return Ok(0) };
    let (p, sweep, mode, scale) = (|| Ok::<_, anyhow::Error>((cfg.system_params()?, cfg.sweep()?, cfg.coherence_mode()?, cfg.scale()?)))()
        .map_err(config_err)?;
    let (values, verdict) = if check_refinement {
        let report = group_index_with_refinement(&p, &sweep, mode, &scale).map_err(solver_err)?;
        let verdict = match report.ensure_resolved() {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        };
        (report.values, verdict)
    } else {
        let spec = spectrum(&p, &sweep, mode, &scale).map_err(solver_err)?;
        (group_index(&spec.points, &scale).map_err(solver_err)?, 0)
    };
    emit(cfg.out_path.as_deref(), &csv::group_index(&values))?;
    Ok(verdict)
}

fn cmd_ob(common: &Common) -> Outcome {
    let Some(cfg) = prepare(common)? else { return Ok(0) };
    let (p, ob, grid, mode) = (|| Ok::<_, anyhow::Error>((cfg.system_params()?, cfg.ob_params()?, cfg.x_grid()?, cfg.ob_mode()?)))()
        .map_err(config_err)?;
    let curve = ob_curve(&p, &ob, &grid, mode).map_err(|e| match e {
        vcoher::Error::ModeMismatch(_) => config_err(e),
        other => solver_err(other),
    })?;
    for (x, e) in &curve.failures {
        eprintln!("warning: x = {x} skipped: {e}");
    }
    emit(cfg.out_path.as_deref(), &csv::ob(&curve))?;
    Ok(0)
}

fn cmd_floquet(common: &Common, oracle: bool, tol: f64, trajectory: Option<&Path>) -> Outcome {
    let Some(cfg) = prepare(common)? else { return Ok(0) };
    let p = cfg.system_params().map_err(config_err)?;
    let k_max = cfg.k_max_checked().map_err(config_err)?;
    if p.delta == 0.0 {
        return Err(config_err(anyhow!(
            "floquet needs delta != 0; at two-photon resonance the state is static (use spectrum or ob)"
        )));
    }
    let sol = harmonic_balance(&build_liouvillian_parts(&p), p.delta, p.omega_p(), k_max).map_err(solver_err)?;
    emit(cfg.out_path.as_deref(), &csv::harmonics(&sol))?;
    if !oracle && trajectory.is_none() {
        return Ok(0);
    }
    let oc = OracleConfig {
        k_max,
        ..OracleConfig::default()
    };
    let (td, traj) = time_domain_harmonics(&p, &oc).map_err(solver_err)?;
    if let Some(path) = trajectory {
        std::fs::write(path, csv::trajectory(&traj))
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(solver_err)?;
    }
    if oracle {
        let report = compare(&sol, &td, tol);
        eprintln!("oracle: {report}");
        return Ok(if report.passed { 0 } else { 1 });
    }
    Ok(0)
}

fn cmd_validate(quick: bool) -> Outcome {
    let checks = run_suite(quick);
    print!("{}", render_table(&checks));
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(0)
    } else {
        eprintln!("failed: {}", failed.join(", "));
        Ok(1)
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("VCOHER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| config_err(anyhow!("VCOHER_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(solver_err)
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match &cli.command {
        Command::Spectrum(common) => cmd_spectrum(common),
        Command::GroupIndex {
            common,
            check_refinement,
        } => cmd_group_index(common, *check_refinement),
        Command::Ob(common) => cmd_ob(common),
        Command::Floquet {
            common,
            oracle,
            tol,
            trajectory,
        } => cmd_floquet(common, *oracle, *tol, trajectory.as_deref()),
        Command::Validate { quick } => cmd_validate(*quick),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
