//! Flat `key = value` configuration.
//!
//! A [`Settings`] map is built from an optional config file and then
//! overridden by command-line flags; the typed configs below are parsed from
//! the merged map. Run manifests use the same keys, so a manifest can be fed
//! back as a config file to reproduce the run.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use abc_adjust_core::data::{Transform, TransformSpec};
use abc_adjust_core::pipeline::{Family, MethodSpec};
use abc_adjust_core::regression::MlpConfig;
use abc_adjust_core::rejection::{Bandwidth, Kernel, RejectionConfig, Standardization};
use abc_adjust_core::toy::{ToyId, ToySpec};

use crate::table::{parse_delimiter, TableFormat};
use crate::{Error, Result};

/// Keys a manifest adds on top of the configuration; ignored when a manifest
/// is read back as a config file.
const RESULT_KEYS: &[&str] = &["command", "timestamp", "h", "accepted", "effective_size", "n_holdout_used", "n_failed"];
const RESULT_PREFIXES: &[&str] = &["h_prime.", "skipped."];

pub const DEFAULT_RATE: f64 = 0.01;
pub const DEFAULT_LEVELS: &[f64] = &[0.5, 0.9, 0.95];
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_CV_METHODS: &str = "rejection,loclinear-homo,loclinear-hetero";
pub const DEFAULT_N_HOLDOUT: usize = 100;

/// Ordered key/value pairs; later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", i + 1)));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Parses `key=value` as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(format!("`{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Rejects keys outside `known`, ignoring manifest result keys.
    fn check_keys(&self, known: &[&str]) -> Result<()> {
        for key in self.values.keys() {
            let ignored = RESULT_KEYS.contains(&key.as_str())
                || RESULT_PREFIXES.iter().any(|p| key.starts_with(p));
            if !ignored && !known.contains(&key.as_str()) {
                return Err(Error::config(format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(format!("invalid value `{v}` for `{key}`")))
            })
            .transpose()
    }

    fn required_path(&self, key: &str) -> Result<PathBuf> {
        self.get(key)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .ok_or_else(|| Error::config(format!("missing `{key}`")))
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
    }
}

/// `;`-separated list of transforms; one entry per parameter, or a single
/// entry applied to every parameter.
pub fn parse_transforms(text: &str) -> Result<Vec<Transform>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Transform>().map_err(Error::from))
        .collect()
}

pub fn expand_transforms(kinds: &[Transform], p: usize) -> Result<TransformSpec> {
    match kinds.len() {
        0 => Ok(TransformSpec::identity(p)),
        1 => Ok(TransformSpec::new(vec![kinds[0]; p])),
        k if k == p => Ok(TransformSpec::new(kinds.to_vec())),
        k => Err(Error::config(format!("{k} transforms given for {p} parameters"))),
    }
}

fn parse_levels(text: &str) -> Result<Vec<f64>> {
    let levels = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|l| *l > 0.0 && *l < 1.0)
                .ok_or_else(|| Error::config(format!("credible level `{s}` not in (0, 1)")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if levels.is_empty() {
        return Err(Error::config("no credible levels"));
    }
    Ok(levels)
}

fn format_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Settings shared by `run` and `cv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Common {
    pub table: PathBuf,
    pub format: TableFormat,
    pub rejection: RejectionConfig,
    pub transforms: Vec<Transform>,
    pub seed: u64,
    pub out: PathBuf,
    pub ridge_lambda: Option<f64>,
    pub mlp: MlpConfig,
}

const COMMON_KEYS: &[&str] = &[
    "table",
    "delimiter",
    "params",
    "stats",
    "rate",
    "bandwidth",
    "kernel",
    "standardize",
    "transform",
    "seed",
    "out",
    "ridge_lambda",
    "mlp_hidden",
    "mlp_epochs",
    "mlp_learning_rate",
    "mlp_l2",
];

impl Common {
    fn from_settings(s: &Settings, default_kernel: Kernel) -> Result<Self> {
        let bandwidth = match (s.parsed::<f64>("rate")?, s.parsed::<f64>("bandwidth")?) {
            (Some(_), Some(_)) => return Err(Error::config("give exactly one of `rate` and `bandwidth`")),
            (Some(p), None) => Bandwidth::Rate(p),
            (None, Some(h)) => Bandwidth::Fixed(h),
            (None, None) => Bandwidth::Rate(DEFAULT_RATE),
        };
        let rejection = RejectionConfig {
            kernel: s.parsed("kernel")?.unwrap_or(default_kernel),
            bandwidth,
            standardization: s.parsed::<Standardization>("standardize")?.unwrap_or_default(),
        };
        rejection.validate()?;
        let seed = s.parsed("seed")?.unwrap_or(DEFAULT_SEED);
        let mut mlp = MlpConfig {
            seed,
            ..MlpConfig::default()
        };
        if let Some(h) = s.parsed("mlp_hidden")? {
            mlp.hidden = h;
        }
        if let Some(e) = s.parsed("mlp_epochs")? {
            mlp.epochs = e;
        }
        if let Some(lr) = s.parsed("mlp_learning_rate")? {
            mlp.learning_rate = lr;
        }
        if let Some(l2) = s.parsed("mlp_l2")? {
            mlp.l2 = l2;
        }
        mlp.validate()?;
        let ridge_lambda = s.parsed::<f64>("ridge_lambda")?;
        if let Some(l) = ridge_lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::config("`ridge_lambda` must be non-negative and finite"));
            }
        }
        Ok(Self {
            table: s.required_path("table")?,
            format: TableFormat {
                delimiter: s.get("delimiter").map(parse_delimiter).transpose()?,
                params: s.list("params"),
                stats: s.list("stats"),
            },
            rejection,
            transforms: s.get("transform").map(parse_transforms).transpose()?.unwrap_or_default(),
            seed,
            out: s.required_path("out")?,
            ridge_lambda,
            mlp,
        })
    }

    /// Applies the ridge penalty and network settings to a parsed method.
    pub fn configure(&self, mut method: MethodSpec) -> MethodSpec {
        match &mut method.family {
            Family::Ridge { lambda } => {
                if let Some(l) = self.ridge_lambda {
                    *lambda = l;
                }
            }
            Family::NeuralNet(cfg) => *cfg = self.mlp.clone(),
            _ => {}
        }
        method
    }

    fn write(&self, out: &mut Settings) {
        out.set("table", self.table.display().to_string());
        if let Some(d) = self.format.delimiter {
            let name = match d {
                b'\t' => "tab",
                b';' => "semicolon",
                _ => "comma",
            };
            out.set("delimiter", name);
        }
        if let Some(p) = &self.format.params {
            out.set("params", p.join(","));
        }
        if let Some(st) = &self.format.stats {
            out.set("stats", st.join(","));
        }
        match self.rejection.bandwidth {
            Bandwidth::Rate(p) => out.set("rate", p.to_string()),
            Bandwidth::Fixed(h) => out.set("bandwidth", h.to_string()),
        }
        out.set("kernel", self.rejection.kernel.as_str());
        out.set("standardize", self.rejection.standardization.as_str());
        out.set("transform", TransformSpec::new(self.transforms.clone()).describe());
        out.set("seed", self.seed.to_string());
        out.set("out", self.out.display().to_string());
        if let Some(l) = self.ridge_lambda {
            out.set("ridge_lambda", l.to_string());
        }
        out.set("mlp_hidden", self.mlp.hidden.to_string());
        out.set("mlp_epochs", self.mlp.epochs.to_string());
        out.set("mlp_learning_rate", self.mlp.learning_rate.to_string());
        out.set("mlp_l2", self.mlp.l2.to_string());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub common: Common,
    pub observed: PathBuf,
    pub method: MethodSpec,
    pub levels: Vec<f64>,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let mut known = COMMON_KEYS.to_vec();
        known.extend(["observed", "method", "levels"]);
        s.check_keys(&known)?;
        let method: MethodSpec = s.parsed("method")?.unwrap_or_else(|| MethodSpec::loclinear(false));
        // Plain rejection keeps every row inside h, so it defaults to the
        // uniform kernel; adjustment methods default to Epanechnikov.
        let default_kernel = if method.family == Family::Rejection {
            Kernel::Uniform
        } else {
            Kernel::Epanechnikov
        };
        let common = Common::from_settings(s, default_kernel)?;
        let method = common.configure(method);
        Ok(Self {
            observed: s.required_path("observed")?,
            method,
            levels: s.get("levels").map(parse_levels).transpose()?.unwrap_or_else(|| DEFAULT_LEVELS.to_vec()),
            common,
        })
    }

    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::default();
        self.common.write(&mut s);
        s.set("observed", self.observed.display().to_string());
        s.set("method", self.method.name());
        s.set("levels", format_list(&self.levels));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub common: Common,
    pub methods: Vec<MethodSpec>,
    pub n_holdout: usize,
}

impl CvConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let mut known = COMMON_KEYS.to_vec();
        known.extend(["methods", "n_holdout"]);
        s.check_keys(&known)?;
        let common = Common::from_settings(s, Kernel::Epanechnikov)?;
        let methods = s
            .list("methods")
            .unwrap_or_else(|| DEFAULT_CV_METHODS.split(',').map(str::to_string).collect())
            .iter()
            .map(|m| m.parse::<MethodSpec>().map(|m| common.configure(m)).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() {
            return Err(Error::config("no methods to cross-validate"));
        }
        Ok(Self {
            n_holdout: s.parsed("n_holdout")?.unwrap_or(DEFAULT_N_HOLDOUT),
            methods,
            common,
        })
    }

    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::default();
        self.common.write(&mut s);
        let names: Vec<String> = self.methods.iter().map(MethodSpec::name).collect();
        s.set("methods", names.join(","));
        s.set("n_holdout", self.n_holdout.to_string());
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub spec: ToySpec,
    pub n: usize,
    pub out: PathBuf,
}

impl ToyConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        s.check_keys(&[
            "model",
            "n",
            "seed",
            "prior_mean",
            "prior_sd",
            "noise_sd",
            "sample_size",
            "noise_stats",
            "out",
        ])?;
        let id: ToyId = s
            .parsed("model")?
            .ok_or_else(|| Error::config("missing `model`"))?;
        let mut spec = ToySpec::new(id, s.parsed("seed")?.unwrap_or(DEFAULT_SEED));
        if let Some(v) = s.parsed("prior_mean")? {
            spec.prior_mean = v;
        }
        if let Some(v) = s.parsed("prior_sd")? {
            spec.prior_sd = v;
        }
        if let Some(v) = s.parsed("noise_sd")? {
            spec.noise_sd = v;
        }
        if let Some(v) = s.parsed("sample_size")? {
            spec.sample_size = v;
        }
        if let Some(v) = s.parsed("noise_stats")? {
            spec.noise_stats = v;
        }
        spec.validate()?;
        let n: usize = s.parsed("n")?.ok_or_else(|| Error::config("missing `n`"))?;
        if n == 0 {
            return Err(Error::config("`n` must be at least 1"));
        }
        Ok(Self {
            spec,
            n,
            out: s.required_path("out")?,
        })
    }

    /// The spec alone (no output directory), as written to `toy.manifest`.
    pub fn spec_settings(&self) -> Settings {
        let mut s = Settings::default();
        s.set("model", self.spec.id.as_str());
        s.set("n", self.n.to_string());
        s.set("seed", self.spec.seed.to_string());
        s.set("prior_mean", self.spec.prior_mean.to_string());
        s.set("prior_sd", self.spec.prior_sd.to_string());
        s.set("noise_sd", self.spec.noise_sd.to_string());
        s.set("sample_size", self.spec.sample_size.to_string());
        s.set("noise_stats", self.spec.noise_stats.to_string());
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub sample: PathBuf,
    pub kernel: Kernel,
    /// Smoothing bandwidth h′; the weighted Silverman rule when `None`.
    pub bandwidth: Option<f64>,
    pub grid_points: usize,
    pub out: PathBuf,
}

impl DensityConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        s.check_keys(&["sample", "kernel", "bandwidth", "grid_points", "out"])?;
        let bandwidth = s.parsed::<f64>("bandwidth")?;
        if let Some(h) = bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("`bandwidth` must be positive and finite"));
            }
        }
        let grid_points = s
            .parsed("grid_points")?
            .unwrap_or(abc_adjust_core::posterior::DEFAULT_GRID_POINTS);
        if grid_points < 2 {
            return Err(Error::config("`grid_points` must be at least 2"));
        }
        Ok(Self {
            sample: s.required_path("sample")?,
            kernel: s.parsed("kernel")?.unwrap_or(Kernel::Gaussian),
            bandwidth,
            grid_points,
            out: s.required_path("out")?,
        })
    }

    pub fn to_settings(&self) -> Settings {
        let mut s = Settings::default();
        s.set("sample", self.sample.display().to_string());
        s.set("kernel", self.kernel.as_str());
        if let Some(h) = self.bandwidth {
            s.set("bandwidth", h.to_string());
        }
        s.set("grid_points", self.grid_points.to_string());
        s.set("out", self.out.display().to_string());
        s
    }
}

/// Renders settings as a `key = value` file.
pub fn render(settings: &Settings) -> String {
    let mut out = String::new();
    for (k, v) in settings.iter() {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}
