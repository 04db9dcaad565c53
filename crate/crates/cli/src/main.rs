use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grafite::bench::{
    parse_count, run_suite, DatasetSpec, FilterKind, Measurements, SuiteConfig, DEFAULT_BUDGETS,
};
use log::warn;

/// Benchmark driver for the Grafite and Bucketing range filters.
#[derive(Debug, Parser)]
#[command(name = "grafite-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// False-positive rate on empty query ranges.
    Fpr(GridArgs),
    /// Average query latency.
    Time(GridArgs),
    /// Median construction time.
    Construct(GridArgs),
    /// Every measurement over the whole grid.
    Suite(GridArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Key source: a binary key file or `uniform:N`.
    #[arg(long, default_value = "uniform:100000")]
    keys: DatasetSpec,
    /// Filters to run.
    #[arg(long, value_delimiter = ',', default_value = "grafite,bucketing")]
    filter: Vec<FilterKind>,
    /// Space budgets in bits per key.
    #[arg(long, value_delimiter = ',')]
    bpk: Vec<f64>,
    /// Query range sizes.
    #[arg(long, value_delimiter = ',', default_value = "1,32,1024")]
    range_size: Vec<u64>,
    /// Correlation degrees in [0, 1]; `none` selects uncorrelated queries.
    #[arg(long, value_delimiter = ',', default_value = "none")]
    corr_degree: Vec<Degree>,
    /// Number of queries per workload (accepts `1e6`, `10^6`).
    #[arg(long, default_value = "1000000", value_parser = count)]
    queries: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Universe is `[0, 2^bits)`.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..=64))]
    universe_bits: u32,
    /// Construction repetitions for the median.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Untimed passes over the queries before timing.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// CSV output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct Degree(Option<f64>);

impl FromStr for Degree {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(Degree(None));
        }
        s.parse()
            .map(|d| Degree(Some(d)))
            .map_err(|_| format!("expected a number or `none`, got {s:?}"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    parse_count(s).ok_or_else(|| format!("not a count: {s:?}"))
}

impl GridArgs {
    fn config(&self, measure: Measurements) -> Result<SuiteConfig> {
        let config = SuiteConfig {
            filters: self.filter.clone(),
            dataset: self.keys.clone(),
            budgets: if self.bpk.is_empty() {
                DEFAULT_BUDGETS.to_vec()
            } else {
                self.bpk.clone()
            },
            range_sizes: self.range_size.clone(),
            workloads: self.corr_degree.iter().map(|d| d.0).collect(),
            queries: self.queries,
            seed: self.seed,
            universe: 1u128 << self.universe_bits,
            measure,
            warmup_rounds: self.warmup,
            construction_repeats: self.repeats,
        };
        if config.construction_repeats == 0 {
            bail!("--repeats must be positive");
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, measure) = match &cli.command {
        Command::Fpr(a) => (
            a,
            Measurements {
                fpr: true,
                query_time: false,
                construction: false,
            },
        ),
        Command::Time(a) => (
            a,
            Measurements {
                fpr: false,
                query_time: true,
                construction: false,
            },
        ),
        Command::Construct(a) => (
            a,
            Measurements {
                fpr: false,
                query_time: false,
                construction: true,
            },
        ),
        Command::Suite(a) => (a, Measurements::ALL),
    };
    let config = args.config(measure)?;
    let out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let report = run_suite(&config, out)?;
    for s in &report.skipped {
        warn!(
            "skipped {} at {} bits/key: {}",
            s.filter, s.budget, s.reason
        );
    }
    eprintln!(
        "{} rows written, {} cells skipped",
        report.rows.len(),
        report.skipped.len()
    );
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
