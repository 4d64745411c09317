//! Command-line experiments: configuration, orchestration, CSV and SVG output.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use log::{error, info, warn};
use mmcov_core::par::with_threads;
use mmcov_core::Parallelism;

use config::{Axis, ExperimentConfig, Metric, RunMode};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mmcov_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("max |analytic - mc| = {gap} at {axis} exceeds {limit}")]
    Gap { gap: f64, axis: f64, limit: f64 },
}

impl CliError {
    /// 2 for bad input, 3 when an integral fails to converge, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use mmcov_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::NonConvergence { .. }) => 3,
            CliError::Core(E::Domain { .. } | E::InvalidConfig(_) | E::DegenerateCenter) => 2,
            CliError::Core(E::ZeroAssociation(_)) | CliError::Io(_) | CliError::Csv(_) | CliError::Gap { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mmcov", version, about = "Coverage and rate of finite millimeter-wave networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Config file of `key = value` lines.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Receiver offset as a fraction of the radius.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// SINR threshold in dB.
    #[arg(long = "beta-db", global = true, allow_hyphen_values = true)]
    pub beta_db: Option<f64>,
    /// Sweep axis: beta_db, delta, theta_deg, mu, alpha_los.
    #[arg(long, global = true)]
    pub axis: Option<String>,
    /// Grid start; with --to and --step replaces the grid.
    #[arg(long, global = true, allow_hyphen_values = true, requires_all = ["to", "step"])]
    pub from: Option<f64>,
    /// Grid end, included when on the grid.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub to: Option<f64>,
    /// Grid spacing.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Explicit comma-separated grid.
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "from")]
    pub grid: Option<String>,
    /// Comma-separated modes: analytic, mc, lower, upper.
    #[arg(long, global = true)]
    pub modes: Option<String>,
    /// coverage or rate.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Simulator trials per grid point.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Simulator seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// CSV destination; standard output when absent.
    #[arg(short, long, global = true)]
    pub output: Option<String>,
    /// Also write a line plot per mode.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Leave wall_ms empty so the CSV is byte-stable.
    #[arg(long = "no-timing", global = true)]
    pub no_timing: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Print the effective configuration and exit.
    #[arg(long = "print-config", global = true)]
    pub print_config: bool,
    /// Errors only on standard error.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Per-point progress on standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Subcommand)]
pub enum Command {
    /// Coverage at one threshold and offset.
    Coverage,
    /// Ergodic rate at one offset.
    Rate,
    /// Any metric over the configured grid in every requested mode.
    Sweep,
    /// Simulator only, over the configured grid.
    Simulate,
    /// Analytic and simulated coverage side by side, with the largest gap.
    Validate {
        /// Fail when the largest gap exceeds this.
        #[arg(long = "max-gap")]
        max_gap: Option<f64>,
    },
}

/// `from, from + step, …` up to `to` inclusive, with the endpoint snapped.
fn arithmetic_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step != 0.0 && step.is_finite() && (to - from) / step >= 0.0) {
        return Err(CliError::Config(format!("grid {from} to {to} step {step} is empty or unbounded")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(CliError::Config(format!("grid of {n} points is too large")));
    }
    Ok((0..n).map(|i| from + step * i as f64).collect())
}

impl Cli {
    /// Defaults, then the file, the environment, and the flags.
    pub fn experiment(&self, env: impl IntoIterator<Item = (String, String)>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        cfg.apply_env(env)?;
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        let flags: [(&str, Option<String>); 8] = [
            ("delta", self.delta.map(|v| v.to_string())),
            ("beta_db", self.beta_db.map(|v| v.to_string())),
            ("axis", self.axis.clone()),
            ("grid", self.grid.clone()),
            ("modes", self.modes.clone()),
            ("metric", self.metric.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if let (Some(from), Some(to), Some(step)) = (self.from, self.to, self.step) {
            cfg.grid = arithmetic_grid(from, to, step)?;
        }
        if let Some(o) = &self.output {
            cfg.set("output", o)?;
        }
        self.shape(&mut cfg);
        Ok(cfg)
    }

    /// Adjust the grid and modes to what the subcommand computes.
    fn shape(&self, cfg: &mut ExperimentConfig) {
        match self.command {
            Command::Coverage => {
                cfg.metric = Metric::Coverage;
                cfg.axis = Axis::BetaDb;
                cfg.grid = vec![cfg.beta_db];
            }
            Command::Rate => {
                cfg.metric = Metric::Rate;
                cfg.axis = Axis::Delta;
                cfg.grid = vec![cfg.delta];
            }
            Command::Sweep => {}
            Command::Simulate => cfg.modes = vec![RunMode::Mc],
            Command::Validate { .. } => {
                cfg.metric = Metric::Coverage;
                cfg.modes = vec![RunMode::Analytic, RunMode::Mc];
            }
        }
    }
}

fn execute(cli: &Cli, cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cli.print_config {
        print!("{}", cfg.serialize());
        return Ok(());
    }
    cfg.validate()?;
    let par = if cli.threads == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Rayon
    };
    let rows = with_threads(cli.threads, || run::evaluate(cfg, par))?;
    match &cfg.output {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            output::write_csv(std::io::BufWriter::new(file), &rows, !cli.no_timing)?;
            info!("wrote {} rows to {path}", rows.len());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            output::write_csv(&mut lock, &rows, !cli.no_timing)?;
            lock.flush()?;
        }
    }
    if let Some(path) = &cli.svg {
        std::fs::write(path, output::render_svg(&rows, cfg.axis.name(), cfg.metric.name()))?;
        info!("wrote {}", path.display());
    }
    if let Command::Validate { max_gap } = cli.command {
        if let Some((gap, axis)) = run::max_gap(&rows) {
            eprintln!(
                "max |analytic - mc| = {} at {} = {}",
                output::format_sig(gap),
                cfg.axis,
                output::format_sig(axis)
            );
            if let Some(limit) = max_gap.filter(|&l| gap > l) {
                return Err(CliError::Gap { gap, axis, limit });
            }
        }
    }
    Ok(())
}

/// Run with explicit arguments and environment; returns the exit code.
pub fn run_with<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Info
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("MMCOV_LOG")
        .target(env_logger::Target::Stderr)
        .try_init();
    let result = cli.experiment(env).and_then(|cfg| execute(&cli, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            if code == 3 {
                warn!("an integral did not converge; looser tol_* values may help");
            }
            error!("{e}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mmcov").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn arithmetic_grid_includes_the_endpoint() {
        let g = arithmetic_grid(-10.0, 30.0, 2.0).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[20], 30.0);
        assert_eq!(arithmetic_grid(1.0, 0.0, -0.25).unwrap().len(), 5);
        assert!(arithmetic_grid(0.0, 1.0, -1.0).is_err());
        assert!(arithmetic_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn flags_override_environment_and_file() {
        let cli = parse(&["sweep", "--axis", "delta", "--grid", "0,0.5", "--seed", "4", "--set", "trials=7"]);
        let cfg = cli
            .experiment([("MMCOV_SEED".into(), "3".into()), ("MMCOV_TRIALS".into(), "5".into())])
            .unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.axis, Axis::Delta);
        assert_eq!(cfg.grid, vec![0.0, 0.5]);
    }

    #[test]
    fn subcommands_shape_the_experiment() {
        let cfg = parse(&["coverage", "--beta-db", "-4", "--delta", "0"]).experiment([]).unwrap();
        assert_eq!((cfg.axis, cfg.grid.clone(), cfg.delta), (Axis::BetaDb, vec![-4.0], 0.0));
        let cfg = parse(&["rate", "--delta", "0.3"]).experiment([]).unwrap();
        assert_eq!((cfg.metric, cfg.grid.clone()), (Metric::Rate, vec![0.3]));
        let cfg = parse(&["simulate", "--modes", "analytic"]).experiment([]).unwrap();
        assert_eq!(cfg.modes, vec![RunMode::Mc]);
        let cfg = parse(&["validate", "--from", "0", "--to", "4", "--step", "2"])
            .experiment([])
            .unwrap();
        assert_eq!(cfg.modes, vec![RunMode::Analytic, RunMode::Mc]);
        assert_eq!(cfg.grid, vec![0.0, 2.0, 4.0]);
    }

    #[test]
    fn exit_codes_follow_the_error_kind() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let nc = mmcov_core::Error::NonConvergence {
            level: 0,
            estimate: 1.0,
            tolerance: 0.1,
            subdivisions: 3,
        };
        assert_eq!(CliError::from(nc).exit_code(), 3);
        assert_eq!(CliError::from(mmcov_core::Error::InvalidConfig("y".into())).exit_code(), 2);
        assert_eq!(CliError::Io(std::io::Error::other("z")).exit_code(), 1);
    }
}
