//! Command-line front end: config resolution, sweeps, CSV/JSON output and
//! the validation suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use config::{parse_window, Grid, Overrides, RunConfig};
use output::{Cache, Table};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rabi-triangle", version, about = "Rabi triangle with a complex hopping phase: ED, analytics, scaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest levels and their observables at one point or along a theta grid.
    Spectrum(Common),
    /// Analytic phase map over theta x g1, with optional ED order parameters.
    PhaseDiagram(Common),
    /// Mean-field displacement, its excitations and a minimizer cross-check.
    Displacement(Common),
    /// Finite-frequency series at the critical coupling and log-log fits.
    Scaling(Common),
    /// Runs the invariant suite and prints a pass/fail table.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Flip the hopping sign on one bond; the translation check must fail.
        #[arg(long)]
        inject_fault: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and JSON files (default `out`; validate
    /// writes only when given).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Not part of the config hash.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub g1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    /// Hopping phase in units of pi.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Fixed photon cutoff per cavity; adaptive when omitted.
    #[arg(long)]
    pub ntr: Option<usize>,
    /// Number of levels.
    #[arg(long)]
    pub k: Option<usize>,
    /// `a,b,c` or `start:stop:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub eta_grid: Option<String>,
    /// Units of pi; `a,b,c` or `start:stop:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub g1_grid: Option<String>,
    /// `lo,hi` in eta.
    #[arg(long)]
    pub fit_window: Option<String>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides> {
        let grid = |s: &Option<String>| s.as_deref().map(str::parse::<Grid>).transpose();
        Ok(Overrides {
            seed: self.seed,
            omega: self.omega,
            delta: self.delta,
            g1: self.g1,
            j: self.j,
            theta: self.theta,
            n_tr: self.ntr,
            k: self.k,
            eta_grid: grid(&self.eta_grid)?,
            theta_grid: grid(&self.theta_grid)?,
            g1_grid: grid(&self.g1_grid)?,
            fit_window: self.fit_window.as_deref().map(parse_window).transpose()?,
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides()?);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_for(e: &Error) -> u8 {
    if commands::is_config_error(e) {
        EXIT_CONFIG
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

type CommandFn = fn(&RunConfig, &Cache) -> Result<(output::ResultEnvelope, Vec<(&'static str, Table)>)>;

fn run_sweep(common: &Common, f: CommandFn) -> Result<u8> {
    let cfg = common.resolve()?;
    let cache = Cache::from_env();
    let start = Instant::now();
    let (mut env, tables) = with_threads(common.threads, || f(&cfg, &cache))??;
    env.wall_time_s = start.elapsed().as_secs_f64();
    let refs: Vec<(&str, &Table)> = tables.iter().map(|(n, t)| (*n, t)).collect();
    let out = common.out_dir();
    env.write(&out, &refs)?;
    for (name, t) in &tables {
        println!("{}: {} rows", out.join(name).display(), t.rows.len());
    }
    if env.all_converged() {
        Ok(EXIT_OK)
    } else {
        eprintln!("some points did not converge; see the converged column");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn run_validate(common: &Common, fault: bool) -> Result<u8> {
    let checks = with_threads(common.threads, || validate::run_suite(fault))??;
    println!("{:<34} {:>12} {:>10}  result", "check", "value", "tolerance");
    for c in &checks {
        println!("{c}");
    }
    if let Some(out) = &common.out {
        let mut t = Table::new(vec!["check", "value", "tolerance", "passed"]);
        for c in &checks {
            t.push(vec![c.name.to_string(), output::num(c.value), output::num(c.tolerance), c.passed.to_string()]);
        }
        std::fs::create_dir_all(out)?;
        t.write(&out.join("validate.csv"))?;
    }
    Ok(if checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_VALIDATION })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let result = match &cli.command {
        Command::Spectrum(c) => run_sweep(c, commands::spectrum),
        Command::PhaseDiagram(c) => run_sweep(c, commands::phase_diagram),
        Command::Displacement(c) => run_sweep(c, commands::displacement),
        Command::Scaling(c) => run_sweep(c, commands::scaling),
        Command::Validate { common, inject_fault } => run_validate(common, *inject_fault),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    ExitCode::from(run(&cli))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("rabi-triangle").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_parse_into_config() {
        let cli = parse(&["spectrum", "--g1", "0.7", "--theta", "-0.3", "--theta-grid", "-1:1:5", "--ntr", "6"]);
        let Command::Spectrum(c) = &cli.command else { panic!("wrong command") };
        let cfg = c.resolve().unwrap();
        assert_eq!(cfg.model.g1, 0.7);
        assert_eq!(cfg.model.theta, -0.3);
        assert_eq!(cfg.ed.n_tr, Some(6));
        assert_eq!(cfg.theta_points().unwrap().len(), 5);
    }

    #[test]
    fn config_errors_exit_3() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[model]\nunknown = 1\n").unwrap();
        let p = path.to_str().unwrap();
        assert_eq!(run(&parse(&["spectrum", "--config", p])), EXIT_CONFIG);
        assert_eq!(run(&parse(&["spectrum", "--omega", "-1"])), EXIT_CONFIG);
        assert_eq!(run(&parse(&["scaling", "--fit-window", "800,100"])), EXIT_CONFIG);
    }

    #[test]
    fn unconverged_solver_exits_2_with_rows_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "[ed.lanczos]\nmax_matvecs = 3\n").unwrap();
        let out = dir.path().join("o");
        let code = run(&parse(&[
            "spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--ntr", "6", "--g1", "0.4",
            "--k", "2",
        ]));
        assert_eq!(code, EXIT_NOT_CONVERGED);
        let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
        assert!(csv.lines().nth(1).unwrap().contains(",false,"));
    }
}
