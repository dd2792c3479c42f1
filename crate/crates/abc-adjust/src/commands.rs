//! The four subcommands. Each `*_artifacts` function does all the work and
//! returns the files in memory; the `cmd_*` wrappers commit them to disk.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use abc_adjust_core::data::{validate_observed, SimulationTable, WeightedSample};
use abc_adjust_core::pipeline::{infer, InferenceConfig};
use abc_adjust_core::posterior::{
    default_grid, kde_bandwidth, summarize, weighted_kde, weighted_mean_var, PosteriorDensity, DEFAULT_GRID_MARGIN,
    DEFAULT_GRID_POINTS,
};
use abc_adjust_core::rejection::Kernel;
use abc_adjust_core::toy::simulate;
use abc_adjust_core::validation::{cross_validate, CvReport};

use crate::artifacts::{timestamp, Artifacts};
use crate::config::{expand_transforms, render, CvConfig, DensityConfig, RunConfig, Settings, ToyConfig};
use crate::format::float;
use crate::table::{load_observed, load_sample, load_table, write_observed, write_sample, write_table, TableFormat};
use crate::{Error, Result};

pub const SAMPLE_FILE: &str = "posterior_sample.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SHRINKAGE_FILE: &str = "shrinkage.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CV_FILE: &str = "cv.csv";
pub const TOY_TABLE_FILE: &str = "table.csv";
pub const TOY_OBSERVED_FILE: &str = "observed.csv";
pub const TOY_TRUTH_FILE: &str = "truth.csv";
pub const TOY_MANIFEST_FILE: &str = "toy.manifest";

/// Kernel used to smooth posterior densities in `run`.
pub const DENSITY_KERNEL: Kernel = Kernel::Gaussian;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path, format: &TableFormat) -> Result<SimulationTable> {
    load_table(open(path)?, format)
}

/// `density_<name>.csv` with anything but ASCII letters, digits, `-` and `_`
/// replaced.
pub fn density_file(param: &str) -> String {
    let clean: String = param
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("density_{clean}.csv")
}

fn bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn density_csv(d: &PosteriorDensity) -> String {
    let mut out = String::from("grid,density\n");
    for (x, y) in d.grid.iter().zip(&d.density) {
        out.push_str(&float(*x));
        out.push(',');
        out.push_str(&float(*y));
        out.push('\n');
    }
    out
}

fn level_tag(level: f64) -> String {
    level.to_string()
}

fn summary_csv(sample: &WeightedSample, names: &[String], levels: &[f64]) -> Result<String> {
    let summary = summarize(sample, levels)?;
    let mut out = String::from("parameter,quantity,value\n");
    let mut row = |name: &str, quantity: &str, value: f64| {
        out.push_str(&format!("{name},{quantity},{}\n", float(value)));
    };
    for (k, name) in names.iter().enumerate() {
        row(name, "mean", summary.mean[k]);
        row(name, "sd", summary.variance[k].sqrt());
        row(name, "variance", summary.variance[k]);
        row(name, "median", summary.median[k]);
        for ci in &summary.intervals {
            row(name, &format!("lower_{}", level_tag(ci.level)), ci.lower[k]);
            row(name, &format!("upper_{}", level_tag(ci.level)), ci.upper[k]);
        }
    }
    Ok(out)
}

fn shrinkage_csv(adjusted: &WeightedSample, rejection: &WeightedSample, names: &[String]) -> String {
    let (_, va) = weighted_mean_var(adjusted);
    let (_, vr) = weighted_mean_var(rejection);
    let mut out = String::from("parameter,rejection_variance,adjusted_variance,ratio\n");
    for (k, name) in names.iter().enumerate() {
        let ratio = if vr[k] > 0.0 { va[k] / vr[k] } else { f64::NAN };
        out.push_str(&format!("{name},{},{},{}\n", float(vr[k]), float(va[k]), float(ratio)));
    }
    out
}

fn manifest(command: &str, config: Settings, results: &[(String, String)], stamp: u64) -> String {
    let mut s = config;
    s.set("command", command);
    for (k, v) in results {
        s.set(k, v.clone());
    }
    s.set("timestamp", stamp.to_string());
    render(&s)
}

/// Everything `run` writes; `stamp` goes into the manifest only.
pub fn run_artifacts(cfg: &RunConfig, stamp: u64) -> Result<Artifacts> {
    let table = read_table(&cfg.common.table, &cfg.common.format)?;
    let raw = load_observed(open(&cfg.observed)?, table.stat_names())?;
    let obs = validate_observed(&table, &raw)?;
    let transforms = expand_transforms(&cfg.common.transforms, table.p())?;
    let inference = infer(
        &table,
        &obs,
        &InferenceConfig {
            rejection: cfg.common.rejection,
            adjustment: cfg.method.adjustment(transforms),
        },
    )?;
    let posterior = inference.posterior();
    let names = table.param_names();

    let mut files = Artifacts::new();
    files.add(SAMPLE_FILE, bytes(|b| write_sample(b, posterior, names)));
    files.add(SUMMARY_FILE, summary_csv(posterior, names, &cfg.levels)?);
    files.add(SHRINKAGE_FILE, shrinkage_csv(posterior, &inference.rejection.sample, names));

    let mut results = vec![
        ("h".to_string(), float(inference.rejection.bandwidth)),
        ("accepted".to_string(), inference.rejection.accepted().to_string()),
        ("effective_size".to_string(), float(posterior.effective_size())),
    ];
    for (k, name) in names.iter().enumerate() {
        // A degenerate posterior (e.g. a point mass) has no smoothing
        // bandwidth; the run still succeeds and the manifest says why.
        let density = kde_bandwidth(posterior, k).and_then(|h| {
            let grid = default_grid(posterior, k, h, DEFAULT_GRID_MARGIN, DEFAULT_GRID_POINTS);
            weighted_kde(posterior, k, &grid, h, DENSITY_KERNEL)
        });
        match density {
            Ok(d) => {
                results.push((format!("h_prime.{name}"), float(d.bandwidth)));
                files.add(density_file(name), density_csv(&d));
            }
            Err(e) => results.push((format!("skipped.{name}"), format!("density: {e}"))),
        }
    }
    files.add(MANIFEST_FILE, manifest("run", cfg.to_settings(), &results, stamp));
    Ok(files)
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    run_artifacts(cfg, timestamp())?.commit(&cfg.common.out)
}

/// Delimited CV report: one row per method with its bootstrap standard
/// error and the two-standard-error bar.
pub fn cv_csv(report: &CvReport, param_names: &[String]) -> String {
    let mut out = String::from("method,error,se,lower_2se,upper_2se,n_holdout,n_failed");
    for name in param_names {
        out.push_str(&format!(",error_{name}"));
    }
    out.push('\n');
    let used = report.n_holdout() - report.failed.len();
    for m in &report.methods {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            m.method,
            float(m.error),
            float(m.bootstrap_se),
            float(m.error - 2.0 * m.bootstrap_se),
            float(m.error + 2.0 * m.bootstrap_se),
            used,
            report.failed.len()
        ));
        for e in &m.per_parameter {
            out.push(',');
            out.push_str(&float(*e));
        }
        out.push('\n');
    }
    out
}

pub fn cv_artifacts(cfg: &CvConfig, stamp: u64) -> Result<(Artifacts, CvReport)> {
    let table = read_table(&cfg.common.table, &cfg.common.format)?;
    if cfg.n_holdout == 0 || cfg.n_holdout >= table.n() {
        return Err(Error::config(format!(
            "`n_holdout` must lie in 1..{}, got {}",
            table.n(),
            cfg.n_holdout
        )));
    }
    let transforms = expand_transforms(&cfg.common.transforms, table.p())?;
    let report = cross_validate(
        &table,
        &cfg.methods,
        &cfg.common.rejection,
        &transforms,
        cfg.n_holdout,
        cfg.common.seed,
    )?;
    let mut files = Artifacts::new();
    files.add(CV_FILE, cv_csv(&report, table.param_names()));
    let results = vec![
        ("n_holdout_used".to_string(), (report.n_holdout() - report.failed.len()).to_string()),
        ("n_failed".to_string(), report.failed.len().to_string()),
    ];
    files.add(MANIFEST_FILE, manifest("cv", cfg.to_settings(), &results, stamp));
    Ok((files, report))
}

pub fn cmd_cv(cfg: &CvConfig) -> Result<(Vec<PathBuf>, CvReport)> {
    let (files, report) = cv_artifacts(cfg, timestamp())?;
    Ok((files.commit(&cfg.common.out)?, report))
}

pub fn simulate_toy_artifacts(cfg: &ToyConfig) -> Result<Artifacts> {
    let draw = simulate(&cfg.spec, cfg.n)?;
    let mut files = Artifacts::new();
    files.add(TOY_TABLE_FILE, bytes(|b| write_table(b, &draw.table, b',')));
    files.add(
        TOY_OBSERVED_FILE,
        bytes(|b| write_observed(b, draw.table.stat_names(), draw.observed.values())),
    );
    let truth: Vec<String> = draw.truth.iter().map(|x| float(*x)).collect();
    let header: Vec<String> = draw.table.param_names().iter().map(|n| format!("param_{n}")).collect();
    files.add(TOY_TRUTH_FILE, format!("{}\n{}\n", header.join(","), truth.join(",")));
    files.add(TOY_MANIFEST_FILE, render(&cfg.spec_settings()));
    Ok(files)
}

pub fn cmd_simulate_toy(cfg: &ToyConfig) -> Result<Vec<PathBuf>> {
    simulate_toy_artifacts(cfg)?.commit(&cfg.out)
}

pub fn density_artifacts(cfg: &DensityConfig, stamp: u64) -> Result<Artifacts> {
    let (sample, names) = load_sample(open(&cfg.sample)?)?;
    let mut files = Artifacts::new();
    let mut results = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let h = match cfg.bandwidth {
            Some(h) => h,
            None => kde_bandwidth(&sample, k)?,
        };
        let grid = default_grid(&sample, k, h, DEFAULT_GRID_MARGIN, cfg.grid_points);
        let d = weighted_kde(&sample, k, &grid, h, cfg.kernel)?;
        results.push((format!("h_prime.{name}"), float(h)));
        files.add(density_file(name), density_csv(&d));
    }
    files.add(MANIFEST_FILE, manifest("density", cfg.to_settings(), &results, stamp));
    Ok(files)
}

pub fn cmd_density(cfg: &DensityConfig) -> Result<Vec<PathBuf>> {
    density_artifacts(cfg, timestamp())?.commit(&cfg.out)
}
