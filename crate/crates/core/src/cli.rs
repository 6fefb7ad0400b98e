//! Command-line front end: argument parsing, validation, and the pipelines
//! behind each subcommand.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::classical::{self, DEFAULT_CENSUS_CAP};
use crate::error::{Error, Result};
use crate::exact::{self, poisson_binomial_pmf, poisson_binomial_pmf_default};
use crate::model::{self, ModelParams, DEFAULT_CHUNK_SIZE};
use crate::primes::{PrimeTable, DEFAULT_SIEVE_CAP};
use crate::report::{
    emit, sorted_sample_csv, write_atomic, Destination, Format, GridRow, LindebergReport, Report,
};
use crate::stats;

/// Environment variable that overrides the census cap.
pub const CENSUS_CAP_ENV: &str = "RANDSIEVE_CENSUS_CAP";

pub const DEFAULT_GRID: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];

#[derive(Debug, Parser)]
#[command(name = "randsieve", version, about = "Random-sieve model of prime factor counts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Report destination; `-` writes to standard output.
    #[arg(long, global = true, default_value = "-")]
    pub output: String,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    pub chunk_size: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Primes up to x with running sums of 1/p and 1/p^2.
    Primes {
        #[arg(long)]
        x: u64,
    },
    /// Exact mean and variance of the factor count.
    Moments {
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        x: Option<u64>,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<Grid>,
    },
    /// Exact probability mass function of the factor count.
    Pmf {
        #[arg(long)]
        x: u64,
        /// Largest count tracked (default ceil(mu + 12 sigma + 30)).
        #[arg(long)]
        support_cap: Option<usize>,
    },
    /// Lindeberg functional L(x, epsilon).
    Lindeberg {
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        x: Option<u64>,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<Grid>,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
    /// Monte Carlo draws of the factor count.
    Sample(SamplingArgs),
    /// Sample summary with KS distances to the exact law and the Gaussian.
    Ks(SamplingArgs),
    /// Census of omega(n) over 1 <= n <= x.
    Census {
        #[arg(long)]
        x: u64,
        /// Also write the sorted standardized statistic as CSV.
        #[arg(long)]
        standardized_output: Option<PathBuf>,
    },
    /// Convergence table over a grid of x values.
    Report {
        #[arg(long, value_parser = parse_grid)]
        grid: Option<Grid>,
    },
}

/// Strictly increasing list of `x` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<u64>);

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let values = s
        .split(',')
        .map(|v| {
            v.trim()
                .replace('_', "")
                .parse::<u64>()
                .map_err(|_| format!("`{v}` is not a non-negative integer"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err("grid entries must be strictly increasing".into());
    }
    Ok(Grid(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Primes,
    Moments,
    Pmf,
    Lindeberg,
    Sample,
    Ks,
    Census,
    Report,
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub x: u64,
    pub grid: Option<Vec<u64>>,
    pub seed: u64,
    pub trials: u64,
    pub chunk_size: u64,
    pub epsilon: Option<f64>,
    pub support_cap: Option<usize>,
    pub output_path: Destination,
    pub format: Format,
    pub threads: Option<usize>,
    pub standardized_output: Option<PathBuf>,
    pub census_cap: u64,
}

impl ExperimentConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let census_cap = census_cap_from_env()?;
        let mut config = ExperimentConfig {
            command: CommandKind::Primes,
            x: 0,
            grid: None,
            seed: 0,
            trials: 1,
            chunk_size: DEFAULT_CHUNK_SIZE,
            epsilon: None,
            support_cap: None,
            output_path: Destination::from(cli.common.output.as_str()),
            format: cli.common.format,
            threads: cli.common.threads,
            standardized_output: None,
            census_cap,
        };
        match cli.command {
            Command::Primes { x } => {
                config.x = x;
            }
            Command::Moments { x, grid } => {
                config.command = CommandKind::Moments;
                config.set_x_or_grid(x, grid);
            }
            Command::Pmf { x, support_cap } => {
                config.command = CommandKind::Pmf;
                config.x = x;
                config.support_cap = support_cap;
            }
            Command::Lindeberg { x, grid, epsilon } => {
                config.command = CommandKind::Lindeberg;
                config.set_x_or_grid(x, grid);
                config.epsilon = Some(epsilon);
            }
            Command::Sample(args) => {
                config.command = CommandKind::Sample;
                config.set_sampling(args);
            }
            Command::Ks(args) => {
                config.command = CommandKind::Ks;
                config.set_sampling(args);
            }
            Command::Census {
                x,
                standardized_output,
            } => {
                config.command = CommandKind::Census;
                config.x = x;
                config.standardized_output = standardized_output;
            }
            Command::Report { grid } => {
                config.command = CommandKind::Report;
                let grid = grid.map(|g| g.0).unwrap_or_else(|| DEFAULT_GRID.to_vec());
                config.x = *grid.last().expect("grid is non-empty");
                config.grid = Some(grid);
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn set_x_or_grid(&mut self, x: Option<u64>, grid: Option<Grid>) {
        match (x, grid) {
            (_, Some(Grid(g))) => {
                self.x = *g.last().expect("grid is non-empty");
                self.grid = Some(g);
            }
            (Some(x), None) => self.x = x,
            (None, None) => {}
        }
    }

    fn set_sampling(&mut self, args: SamplingArgs) {
        self.x = args.x;
        self.seed = args.seed;
        self.trials = args.trials;
        self.chunk_size = args.chunk_size;
    }

    /// The `x` values the command iterates over.
    pub fn xs(&self) -> Vec<u64> {
        self.grid.clone().unwrap_or_else(|| vec![self.x])
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(grid) = &self.grid {
            if grid.is_empty() {
                return Err(Error::invalid("grid", "must not be empty"));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("grid", "entries must be strictly increasing"));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid("epsilon", format!("must be positive (got {eps})")));
            }
        }
        let min_x = match self.command {
            CommandKind::Primes | CommandKind::Census => 1,
            CommandKind::Pmf | CommandKind::Sample | CommandKind::Ks => 2,
            CommandKind::Moments | CommandKind::Lindeberg | CommandKind::Report => 3,
        };
        if let Some(&smallest) = self.xs().iter().min() {
            if smallest < min_x {
                return Err(Error::invalid(
                    "x",
                    format!("must be at least {min_x} for this command (got {smallest})"),
                ));
            }
        }
        if self.command == CommandKind::Census && self.standardized_output.is_some() && self.x < 100
        {
            return Err(Error::invalid(
                "x",
                "the standardized statistic needs x >= 100",
            ));
        }
        if matches!(self.command, CommandKind::Sample | CommandKind::Ks) {
            ModelParams::new(self.x, self.seed, self.trials, self.chunk_size)?;
        }
        if self.support_cap == Some(0) {
            return Err(Error::invalid("support_cap", "must be at least 1"));
        }
        Ok(())
    }
}

fn census_cap_from_env() -> Result<u64> {
    match std::env::var(CENSUS_CAP_ENV) {
        Err(_) => Ok(DEFAULT_CENSUS_CAP),
        Ok(raw) => raw.trim().replace('_', "").parse().map_err(|_| {
            Error::invalid(CENSUS_CAP_ENV, format!("`{raw}` is not a non-negative integer"))
        }),
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: Report,
    /// One-line human-readable summary.
    pub summary: String,
}

/// Builds the report for `config` without writing it anywhere.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?
            .install(|| pipeline(config)),
        None => pipeline(config),
    }
}

/// Runs `config` and writes its report atomically to the configured output.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = execute(config)?;
    let text = outcome.report.render(config.format)?;
    emit(&config.output_path, &text)?;
    Ok(outcome)
}

fn pipeline(config: &ExperimentConfig) -> Result<RunOutcome> {
    if config.command == CommandKind::Census && config.x > config.census_cap {
        return Err(Error::ResourceBound {
            param: "x",
            value: config.x,
            cap: config.census_cap,
        });
    }
    let table = PrimeTable::sieve_with_cap(config.x, DEFAULT_SIEVE_CAP)?;

    let (report, summary) = match config.command {
        CommandKind::Primes => {
            let n = table.primes().len();
            let summary = format!(
                "primes: {n} primes <= {}, sum 1/p = {:.6}, sum 1/p^2 = {:.6}",
                config.x,
                table.reciprocal_sum(config.x)?,
                table.prime_zeta_partial(config.x)?
            );
            (Report::Primes(table), summary)
        }
        CommandKind::Moments => {
            let rows = config
                .xs()
                .into_iter()
                .map(|x| exact::exact_moments(&table, x))
                .collect::<Result<Vec<_>>>()?;
            let last = rows.last().expect("at least one x");
            let summary = format!(
                "moments: x = {} mu = {:.6} sigma_sq = {:.6} mertens_gap = {:.6}",
                last.x, last.mu, last.sigma_sq, last.mertens_gap
            );
            (Report::Moments(rows), summary)
        }
        CommandKind::Pmf => {
            let pmf = match config.support_cap {
                Some(cap) => poisson_binomial_pmf(&table, config.x, cap)?,
                None => poisson_binomial_pmf_default(&table, config.x)?,
            };
            let mut summary = format!(
                "pmf: x = {} support_cap = {} truncated_tail = {:e}",
                pmf.x, pmf.support_cap, pmf.truncated_tail
            );
            if pmf.tail_warning {
                summary.push_str(" (warning: support_cap too small)");
            }
            (Report::Pmf(pmf), summary)
        }
        CommandKind::Lindeberg => {
            let epsilon = config.epsilon.unwrap_or(1.0);
            let rows = config
                .xs()
                .into_iter()
                .map(|x| {
                    let sigma_sq = exact::bernoulli_moments(&table, x)?.sigma_sq;
                    Ok(LindebergReport {
                        x,
                        epsilon,
                        sigma_sq,
                        threshold: epsilon * sigma_sq.sqrt(),
                        value: exact::lindeberg_sum(&table, x, epsilon)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let last = rows.last().expect("at least one x");
            let summary = format!(
                "lindeberg: x = {} epsilon = {} L = {:e}",
                last.x, last.epsilon, last.value
            );
            (Report::Lindeberg(rows), summary)
        }
        CommandKind::Sample => {
            let params = ModelParams::new(config.x, config.seed, config.trials, config.chunk_size)?;
            let batch = model::sample_omega(&table, &params)?;
            let mean = batch.omegas.iter().map(|&w| f64::from(w)).sum::<f64>()
                / batch.omegas.len() as f64;
            let summary = format!(
                "sample: x = {} seed = {} trials = {} mean = {mean:.6}",
                params.x, params.seed, params.trials
            );
            (Report::Sample(batch), summary)
        }
        CommandKind::Ks => {
            let params = ModelParams::new(config.x, config.seed, config.trials, config.chunk_size)?;
            let batch = model::sample_omega(&table, &params)?;
            let pmf = poisson_binomial_pmf_default(&table, config.x)?;
            let m = exact::bernoulli_moments(&table, config.x)?;
            let s = stats::summarize_with_ks(&batch, &pmf, m.mu, m.sigma_sq.sqrt())?;
            let summary = format!(
                "ks: x = {} trials = {} mean = {:.6} ks_vs_exact = {:.6} ks_vs_normal = {:.6}",
                params.x,
                params.trials,
                s.mean,
                s.ks_vs_exact.unwrap_or(f64::NAN),
                s.ks_vs_normal.unwrap_or(f64::NAN)
            );
            (Report::Ks(s), summary)
        }
        CommandKind::Census => {
            let census = classical::omega_census_with_cap(&table, config.x, config.census_cap)?;
            let mut summary = format!(
                "census: x = {} mean omega = {:.6}",
                census.x,
                census.omega_total as f64 / census.x as f64
            );
            if census.x >= 100 {
                let values = classical::ek_standardized_values(&census)?;
                let d = stats::ks_empirical(&values, &stats::StandardNormal)?;
                summary.push_str(&format!(" standardized KS = {d:.6}"));
                if let Some(path) = &config.standardized_output {
                    write_atomic(path, sorted_sample_csv(&values).as_bytes())?;
                }
            }
            (Report::Census(census), summary)
        }
        CommandKind::Report => {
            let rows = grid_rows(&table, &config.xs())?;
            let summary = format!(
                "report: {} rows, D = [{}]",
                rows.len(),
                rows.iter()
                    .map(|r| format!("{:.4}", r.d_exact_vs_normal))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            (Report::Grid(rows), summary)
        }
    };
    Ok(RunOutcome {
        report,
        summary: format!("{summary} -> {}", config.output_path),
    })
}

/// `(x, μ_x, σ_x², mertens_gap, D(x))` for every `x` in `xs`.
pub fn grid_rows(table: &PrimeTable, xs: &[u64]) -> Result<Vec<GridRow>> {
    xs.iter()
        .map(|&x| {
            let m = exact::exact_moments(table, x)?;
            let pmf = poisson_binomial_pmf_default(table, x)?;
            Ok(GridRow {
                x,
                mu: m.mu,
                sigma_sq: m.sigma_sq,
                mertens_gap: m.mertens_gap,
                d_exact_vs_normal: exact::ks_exact_vs_normal(&pmf, m.mu, m.sigma())?,
            })
        })
        .collect()
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = ExperimentConfig::from_cli(cli).and_then(|config| run(&config));
    match outcome {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
