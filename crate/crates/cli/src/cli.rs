use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use rwrange_core::ObservableKind;

use crate::config::{parse_grid, Command, ConfigError, ExperimentConfig};
use crate::runner::run;
use crate::store::verify;

#[derive(Debug, Parser)]
#[command(name = "rwrange-lab", version, about = "Monte Carlo experiments on random walk range observables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Simulate walks, dump them and record one observable per walk.
    Simulate(RunArgs),
    /// Sample cross terms and fit their survival exponent.
    Tails(RunArgs),
    /// Variance of an observable across a grid of walk lengths.
    Variance(RunArgs),
    /// Normality diagnostics of the standardized observable.
    Clt(RunArgs),
    /// Dyadic cross-term decomposition of sampled walks.
    Decompose(RunArgs),
    /// Capacity of walk ranges by escape probabilities.
    Capacity(RunArgs),
    /// Compare fast algorithms against brute-force oracles.
    OracleCheck(RunArgs),
    /// Check output files against the checksums in a run manifest.
    Verify {
        /// Output directory of a finished run.
        dir: PathBuf,
    },
}

/// A parsed `--n-grid` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

fn parse_grid_arg(text: &str) -> Result<Grid, String> {
    parse_grid(text).map(Grid)
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    /// distance, cut or resistance.
    #[arg(long)]
    pub kind: Option<ObservableKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// `256..8192` (powers of two) or a comma list.
    #[arg(long, value_parser = parse_grid_arg)]
    pub n_grid: Option<Grid>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; defaults to $RWRANGE_OUT, then ./rwrange-out.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub l_min: Option<f64>,
    #[arg(long)]
    pub l_max: Option<f64>,
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub radius_factors: Option<Vec<f64>>,
    #[arg(long)]
    pub trials_per_point: Option<u32>,
    #[arg(long)]
    pub jump_threshold: Option<f64>,
    /// Disable sphere jumps in the capacity estimator.
    #[arg(long)]
    pub no_jumps: bool,
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub chunk: Option<usize>,
    #[arg(long)]
    pub rel_tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

impl RunArgs {
    /// Configuration from the optional file with flags applied on top.
    pub fn resolve(&self, command: Command) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(command),
        };
        if cfg.command != command {
            bail!("config file is for `{}`, not `{command}`", cfg.command);
        }
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            };
            ($field:ident, opt) => {
                if let Some(v) = self.$field.clone() {
                    cfg.$field = Some(v);
                }
            };
        }
        set!(d);
        set!(kind);
        set!(n, opt);
        if let Some(Grid(grid)) = &self.n_grid {
            cfg.n_grid = Some(grid.clone());
        }
        set!(samples, opt);
        set!(seed);
        set!(threads, opt);
        set!(levels);
        set!(radius_factors);
        set!(trials_per_point);
        set!(max_n);
        set!(instances);
        set!(chunk);
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        if self.l_min.is_some() || self.l_max.is_some() {
            let (lo, hi) = cfg.window().unwrap_or((1.0, 2.0));
            cfg.tail_window = Some([self.l_min.unwrap_or(lo), self.l_max.unwrap_or(hi)]);
        }
        if let Some(t) = self.jump_threshold {
            cfg.jump_threshold = Some(t);
        }
        if self.no_jumps {
            cfg.jump_threshold = None;
        }
        if let Some(t) = self.rel_tolerance {
            cfg.solver.rel_tolerance = t;
        }
        if let Some(m) = self.max_iterations {
            cfg.solver.max_iterations = Some(m);
        }
        Ok(cfg)
    }
}

fn command_of(sub: &Sub) -> Option<(Command, &RunArgs)> {
    Some(match sub {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Tails(a) => (Command::Tails, a),
        Sub::Variance(a) => (Command::Variance, a),
        Sub::Clt(a) => (Command::Clt, a),
        Sub::Decompose(a) => (Command::Decompose, a),
        Sub::Capacity(a) => (Command::Capacity, a),
        Sub::OracleCheck(a) => (Command::OracleCheck, a),
        Sub::Verify { .. } => return None,
    })
}

/// Exit status: 0 on success, 1 on failed checks or runtime errors, 2 on
/// invalid configuration.
pub fn execute(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    if let Sub::Verify { dir } = &cli.command {
        let bad = verify(dir)?;
        for name in &bad {
            println!("checksum mismatch: {name}");
        }
        if bad.is_empty() {
            println!("all files match {}", dir.join(crate::store::MANIFEST).display());
        }
        return Ok(bad.is_empty());
    }
    let (command, args) = command_of(&cli.command).expect("run subcommand");
    let cfg = args.resolve(command)?;
    cfg.validate()?;
    if args.dry_run {
        println!("{}", cfg.to_json());
        return Ok(true);
    }
    let outcome = run(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    if !outcome.ok {
        eprintln!("checks failed; see {}", cfg.resolved_output_dir().join("summary.json").display());
    }
    Ok(outcome.ok)
}
