//! Batch front end. One command per process; each run writes
//! `<out>/<command>/<timestamp>-<hash>/` with `manifest.json` and `results.csv`.
//!
//! Exit codes: 0 when every requested computation converged, 1 when some
//! failed (they are listed in the manifest), 2 for usage and config errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use config::*;
use run::{Outcome, RunContext, MANIFEST_VERSION};

const RIESZ_HELP: &str = "\
Columns of results.csv:
  alpha, d      kernel exponent and dimension
  regime        constant | subharmonic | newtonian | superharmonic
  c_alpha       unit-ball capacity of B |x|^-alpha
  r, h_alpha    radius and equilibrium potential there (empty when no radii)
Invalid (alpha, d) pairs are skipped and listed under `notes` in the manifest.";

const CAPACITY_HELP: &str = "\
Columns of results.csv, one row per radius:
  t, points            radius and number of domain points
  capacity, energy     1/E and the minimal discrete energy E
  gap, gap_tol         certified duality gap and the stopping tolerance
  iterations           solver iterations
  min_potential        min of the equilibrium potential h on the domain
  relative_gap_bound   true capacity lies in [capacity, capacity (1 + bound)]
  infinite             degenerate kernel, capacity infinite
  reference            closed-form c_alpha T^alpha for Riesz kernels, else empty
solution_<i>.csv holds x0..x{d-1}, nu, h for radius i.
With `validators: true`, validators.csv holds t, name, lhs, rhs, slack, allowance, holds.";

const PERSIST_HELP: &str = "\
Columns of results.csv, one row per domain and level:
  t, points          radius (empty for an explicit point set) and domain size
  level, method      persistence level and estimator (naive | importance)
  p_hat, theta_hat   P[min f >= level] and -log p_hat
  se_p, se_theta     standard errors (delta method for theta)
  ess, n, hits       effective sample size, samples, persisting samples
  rare, p_upper      no sample persisted; one-sided 95% bound on p
  unreliable         effective sample size below 10
  tilt_level         importance tilt level, empty for naive
  capacity           Cap of the domain (with a hypothesis or importance sampling)
  predictor, ratio   m (d - alpha) Cap log T and theta_hat / predictor (with a hypothesis)";

const REPULSION_HELP: &str = "\
Columns of results.csv, one row per radius:
  t, ell_t                 radius and l_T = sqrt(2 m (d - alpha) log T)
  accepted, draws          conditioned samples kept and draws used
  acceptance               accepted / draws
  mean_pairing, se_pairing mean of <f, eta_T> given persistence, and its SE
  reference                <h_T, eta_T>
  gap, gap_se              |mean_pairing / l_T - reference| and its SE
  skipped                  acceptance fell below the minimum rate";

const COUNTEREXAMPLE_HELP: &str = "\
irregular: one row per jump scale
  scale, t_scale       scale index i and T_i
  t_inner, t_outer     radii T_i/4 - T_(i-1)/epsilon and T_i/4
  cap_inner, cap_outer ball capacities there
  ratio, rho, exceeds  cap_outer / cap_inner, the threshold, ratio > rho
cantor: one row per depth interval on [1, 2]
  left, right, mass    interval and its share of the one-sided mass";

#[derive(Parser, Debug)]
#[command(name = "sgflab", version, about = "Capacities, persistence and spectral experiments for stationary Gaussian fields")]
struct Cli {
    /// JSON config file, or a manifest.json from an earlier run to reproduce it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for Monte Carlo and Gram assembly.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the default config of the command and exit.
    #[arg(long, global = true)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form Riesz capacities c_alpha and potentials h_alpha.
    #[command(after_help = RIESZ_HELP)]
    RieszTable,
    /// Equilibrium measures and capacities of balls.
    #[command(after_help = CAPACITY_HELP)]
    Capacity,
    /// Monte Carlo persistence probabilities.
    #[command(after_help = PERSIST_HELP)]
    Persist,
    /// Entropic repulsion under conditioning on persistence.
    #[command(after_help = REPULSION_HELP)]
    Repulsion,
    /// Spectral measures with irregular capacity growth or singular support.
    #[command(after_help = COUNTEREXAMPLE_HELP)]
    Counterexample { which: Which },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Irregular,
    Cantor,
}

enum CliError {
    Usage(String),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Io(e)
    }
}

/// Reads a config or the config snapshot of a manifest; missing file means defaults.
fn load<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str, variant: Option<&str>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    if value.get("manifest_version").is_some() {
        if value["manifest_version"] != MANIFEST_VERSION {
            return Err(CliError::Usage(format!("unsupported manifest version {}", value["manifest_version"])));
        }
        let recorded = (value["command"].as_str(), value["variant"].as_str());
        if recorded != (Some(command), variant) {
            return Err(CliError::Usage(format!("manifest was written by {:?}, not {command}", recorded.0.unwrap_or("?"))));
        }
        value = value["config"].take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config schema error: {e}")))
}

fn print_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(anyhow::Error::from)?;
    // a closed pipe (`| head`) is not an error worth reporting
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(())
}

fn execute<T, F>(cli: &Cli, command: &str, variant: Option<&str>, patch_seed: impl Fn(&mut T, u64), body: F) -> Result<bool, CliError>
where
    T: DeserializeOwned + Default + Serialize,
    F: FnOnce(&T) -> Result<Outcome, String>,
{
    if cli.print_defaults {
        print_json(&T::default())?;
        return Ok(true);
    }
    let mut cfg: T = load(cli.config.as_deref(), command, variant)?;
    if let Some(s) = cli.seed {
        patch_seed(&mut cfg, s);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(anyhow::anyhow!("thread pool: {e}")))?;
    }
    let ctx = RunContext {
        command: command.to_string(),
        variant: variant.map(String::from),
        config: serde_json::to_value(&cfg).map_err(anyhow::Error::from)?,
        threads: cli.threads,
        started: chrono::Utc::now(),
        clock: Instant::now(),
    };
    let outcome = body(&cfg).map_err(CliError::Usage)?;
    let dir = run::write_run(&cli.out, &ctx, &outcome)?;
    for n in &outcome.notes {
        eprintln!("note: {n}");
    }
    for f in &outcome.failures {
        eprintln!("failed: {}: {}", f.item, f.error);
    }
    println!("{}", dir.display());
    Ok(outcome.failures.is_empty())
}

fn no_seed<T>(_: &mut T, _: u64) {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RieszTable => execute(&cli, "riesz-table", None, no_seed, commands::riesz_table),
        Command::Capacity => execute(&cli, "capacity", None, no_seed, commands::capacity),
        Command::Persist => execute(&cli, "persist", None, |c: &mut PersistConfig, s| c.seed = s, commands::persist),
        Command::Repulsion => {
            execute(&cli, "repulsion", None, |c: &mut RepulsionRunConfig, s| c.experiment.seed = s, commands::repulsion)
        }
        Command::Counterexample { which: Which::Irregular } => {
            execute(&cli, "counterexample", Some("irregular"), no_seed, commands::irregular)
        }
        Command::Counterexample { which: Which::Cantor } => {
            execute(&cli, "counterexample", Some("cantor"), no_seed, commands::cantor)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
