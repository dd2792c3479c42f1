use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use abc_adjust::commands::{cmd_cv, cmd_density, cmd_run, cmd_simulate_toy, cv_csv};
use abc_adjust::config::{CvConfig, DensityConfig, RunConfig, Settings, ToyConfig};
use abc_adjust::{Error, Result};

/// Regression-adjusted approximate Bayesian computation.
///
/// Every option can also be given in a flat `key = value` file passed with
/// `--config`; command-line flags override the file.
#[derive(Parser)]
#[command(name = "abc-adjust", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rejection, regression adjustment and posterior summaries.
    Run(RunArgs),
    /// Cross-validated prediction error of several methods.
    Cv(CvArgs),
    /// Simulate a reference table from a built-in toy model.
    SimulateToy(ToyArgs),
    /// Kernel density tables for a weighted posterior sample.
    Density(DensityArgs),
}

#[derive(Args)]
struct Base {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` setting (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Common {
    /// Reference table (`param_*` and `stat_*` columns).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Acceptance rate in (0, 1].
    #[arg(long)]
    rate: Option<f64>,
    /// Fixed acceptance radius (instead of --rate).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// uniform, epanechnikov or gaussian.
    #[arg(long)]
    kernel: Option<String>,
    /// mad, sd or none.
    #[arg(long)]
    standardize: Option<String>,
    /// Parameter transform: none, log or logit(a,b); repeat once per
    /// parameter or give one for all.
    #[arg(long)]
    transform: Vec<String>,
    /// Field delimiter of the table: comma, tab or semicolon.
    #[arg(long)]
    delimiter: Option<String>,
    /// Comma-separated parameter columns (overrides the `param_` prefix).
    #[arg(long)]
    params: Option<String>,
    /// Comma-separated statistic columns (overrides the `stat_` prefix).
    #[arg(long)]
    stats: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    base: Base,
    #[command(flatten)]
    common: Common,
    /// Observed statistics.
    #[arg(long)]
    observed: Option<PathBuf>,
    /// rejection, loclinear, ridge or neuralnet, with -homo or -hetero.
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated credible levels.
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    base: Base,
    #[command(flatten)]
    common: Common,
    /// Comma-separated methods to compare.
    #[arg(long, alias = "method")]
    methods: Option<String>,
    /// Number of held-out pseudo-observations.
    #[arg(long)]
    n_holdout: Option<usize>,
}

#[derive(Args)]
struct ToyArgs {
    #[command(flatten)]
    base: Base,
    /// gaussian_conjugate, linear_gaussian_multi or hetero_scale.
    #[arg(long)]
    model: Option<String>,
    /// Number of simulations.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    noise_stats: Option<usize>,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    base: Base,
    /// Weighted sample (`param_*` columns and `weight`).
    #[arg(long, alias = "table")]
    sample: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<String>,
    /// Smoothing bandwidth; weighted Silverman rule when omitted.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

fn put(s: &mut Settings, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        s.set(key, v.to_string());
    }
}

fn path(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

impl Base {
    fn settings(self) -> Result<(Settings, Vec<String>)> {
        let mut s = match &self.config {
            Some(p) => {
                Settings::parse(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?
            }
            None => Settings::default(),
        };
        put(&mut s, "out", path(self.out));
        put(&mut s, "seed", self.seed);
        Ok((s, self.set))
    }
}

impl Common {
    fn apply(self, s: &mut Settings) {
        put(s, "table", path(self.table));
        put(s, "kernel", self.kernel);
        put(s, "standardize", self.standardize);
        put(s, "delimiter", self.delimiter);
        put(s, "params", self.params);
        put(s, "stats", self.stats);
        if !self.transform.is_empty() {
            s.set("transform", self.transform.join(";"));
        }
        // A flag picks the acceptance rule outright, dropping the other one
        // if the config file set it.
        if let Some(r) = self.rate {
            s.set("rate", r.to_string());
            if self.bandwidth.is_none() {
                s.remove("bandwidth");
            }
        }
        if let Some(h) = self.bandwidth {
            s.set("bandwidth", h.to_string());
            if self.rate.is_none() {
                s.remove("rate");
            }
        }
    }
}

fn finish(mut s: Settings, extra: Vec<String>) -> Result<Settings> {
    for pair in &extra {
        s.set_pair(pair)?;
    }
    Ok(s)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(a) => {
            let (mut s, extra) = a.base.settings()?;
            a.common.apply(&mut s);
            put(&mut s, "observed", path(a.observed));
            put(&mut s, "method", a.method);
            put(&mut s, "levels", a.levels);
            let cfg = RunConfig::from_settings(&finish(s, extra)?)?;
            print_paths(&cmd_run(&cfg)?);
        }
        Command::Cv(a) => {
            let (mut s, extra) = a.base.settings()?;
            a.common.apply(&mut s);
            put(&mut s, "methods", a.methods);
            put(&mut s, "n_holdout", a.n_holdout);
            let cfg = CvConfig::from_settings(&finish(s, extra)?)?;
            let (paths, report) = cmd_cv(&cfg)?;
            let table = abc_adjust::commands::read_table(&cfg.common.table, &cfg.common.format)?;
            print!("{}", cv_csv(&report, table.param_names()));
            print_paths(&paths);
        }
        Command::SimulateToy(a) => {
            let (mut s, extra) = a.base.settings()?;
            put(&mut s, "model", a.model);
            put(&mut s, "n", a.n);
            put(&mut s, "noise_stats", a.noise_stats);
            let cfg = ToyConfig::from_settings(&finish(s, extra)?)?;
            print_paths(&cmd_simulate_toy(&cfg)?);
        }
        Command::Density(a) => {
            let (mut s, extra) = a.base.settings()?;
            put(&mut s, "sample", path(a.sample));
            put(&mut s, "kernel", a.kernel);
            put(&mut s, "bandwidth", a.bandwidth);
            put(&mut s, "grid_points", a.grid_points);
            let cfg = DensityConfig::from_settings(&finish(s, extra)?)?;
            print_paths(&cmd_density(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::from(abc_adjust::EXIT_OK as u8),
        Err(e) => {
            eprintln!("abc-adjust: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
