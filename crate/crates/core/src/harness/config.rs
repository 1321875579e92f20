//! Experiment and method configuration, read from TOML.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distributions::DistributionSpec;
use crate::error::{GofError, Result};
use crate::hypothesis::{min_permutations, Method, DEFAULT_C1, DEFAULT_PERMUTATIONS};
use crate::kernels::{bandwidth_grid, doubling_grid, median_heuristic, Kernel};
use crate::regularizers::Regularizer;
use crate::sample::Sample;

pub const DEFAULT_LAMBDA_LO: f64 = 1e-6;
pub const DEFAULT_LAMBDA_HI: f64 = 5.0;
pub const DEFAULT_BANDWIDTH_LO: f64 = 0.01;
pub const DEFAULT_BANDWIDTH_HI: f64 = 100.0;
pub const DEFAULT_REPS: usize = 200;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_S: usize = 100;
pub const DEFAULT_K_MAX: usize = 1024;

fn config_err(msg: impl Into<String>) -> GofError {
    GofError::Config(msg.into())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    #[default]
    Gaussian,
    #[serde(alias = "periodic-spline", alias = "periodic_spline")]
    Spline,
}

impl FromStr for KernelChoice {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelChoice::Gaussian),
            "spline" | "periodic-spline" | "periodic_spline" => Ok(KernelChoice::Spline),
            other => Err(config_err(format!("unknown kernel '{other}' (expected gaussian or spline)"))),
        }
    }
}

/// Gaussian bandwidths: the median heuristic h, the doubling grid
/// {w_L h, 2 w_L h, …} ≤ w_U h, or explicit values.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum BandwidthSpec {
    #[default]
    Median,
    Auto { lo: f64, hi: f64 },
    List(Vec<f64>),
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| config_err(format!("{what}: '{}' is not a number", t.trim()))))
        .collect()
}

impl FromStr for BandwidthSpec {
    type Err = GofError;

    /// `median`, `auto`, `auto:<w_L>:<w_U>` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s {
            "median" => BandwidthSpec::Median,
            "auto" => BandwidthSpec::Auto { lo: DEFAULT_BANDWIDTH_LO, hi: DEFAULT_BANDWIDTH_HI },
            _ if s.starts_with("auto:") => {
                let v = parse_list(&s[5..].replace(':', ","), "bandwidths")?;
                match v[..] {
                    [lo, hi] => BandwidthSpec::Auto { lo, hi },
                    _ => return Err(config_err(format!("bandwidths: expected auto:<lo>:<hi>, got '{s}'"))),
                }
            }
            _ => BandwidthSpec::List(parse_list(s, "bandwidths")?),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for BandwidthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthSpec::Median => f.write_str("median"),
            BandwidthSpec::Auto { lo, hi } => write!(f, "auto:{lo}:{hi}"),
            BandwidthSpec::List(v) => write!(f, "{}", v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
        }
    }
}

impl BandwidthSpec {
    fn validate(&self) -> Result<()> {
        match self {
            BandwidthSpec::Median => Ok(()),
            BandwidthSpec::Auto { lo, hi } if *lo > 0.0 && lo <= hi && hi.is_finite() => Ok(()),
            BandwidthSpec::List(v) if !v.is_empty() && v.iter().all(|h| *h > 0.0 && h.is_finite()) => Ok(()),
            other => Err(config_err(format!("invalid bandwidth specification '{other}'"))),
        }
    }

    pub fn len_hint(&self) -> usize {
        match self {
            BandwidthSpec::Median => 1,
            BandwidthSpec::Auto { lo, hi } => doubling_grid(*lo, *hi).map(|g| g.len()).unwrap_or(1),
            BandwidthSpec::List(v) => v.len(),
        }
    }

    /// Resolves to concrete bandwidths; the median is taken over the pooled (X, X⁰) sample.
    pub fn resolve(&self, x: &Sample, x0: &Sample) -> Result<Vec<f64>> {
        match self {
            BandwidthSpec::Median => Ok(vec![median_heuristic(x, x0)?]),
            BandwidthSpec::Auto { lo, hi } => bandwidth_grid(median_heuristic(x, x0)?, *lo, *hi),
            BandwidthSpec::List(v) => Ok(v.clone()),
        }
    }
}

/// λ values: the doubling grid between two endpoints, or explicit values.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaSpec {
    Range { lo: f64, hi: f64 },
    List(Vec<f64>),
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Range { lo: DEFAULT_LAMBDA_LO, hi: DEFAULT_LAMBDA_HI }
    }
}

impl FromStr for LambdaSpec {
    type Err = GofError;

    /// `<lo>:<hi>` for a doubling grid or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s.split_once(':') {
            Some((lo, hi)) => {
                let v = parse_list(&format!("{lo},{hi}"), "lambdas")?;
                LambdaSpec::Range { lo: v[0], hi: v[1] }
            }
            None => LambdaSpec::List(parse_list(s, "lambdas")?),
        };
        spec.values()?;
        Ok(spec)
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Range { lo, hi } => write!(f, "{lo}:{hi}"),
            LambdaSpec::List(v) => write!(f, "{}", v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
        }
    }
}

impl LambdaSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            LambdaSpec::Range { lo, hi } => doubling_grid(*lo, *hi).map_err(|e| config_err(format!("lambdas: {e}")))?,
            LambdaSpec::List(v) => v.clone(),
        };
        if v.is_empty() || v.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(config_err(format!("lambdas must be a nonempty list of positive values, got '{self}'")));
        }
        Ok(v)
    }
}

macro_rules! string_or_list_serde {
    ($ty:ty, $list:path) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
                #[derive(Deserialize)]
                #[serde(untagged)]
                enum Repr {
                    Text(String),
                    One(f64),
                    Many(Vec<f64>),
                }
                match Repr::deserialize(deserializer)? {
                    Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
                    Repr::One(v) => Ok($list(vec![v])),
                    Repr::Many(v) => Ok($list(v)),
                }
            }
        }
    };
}

string_or_list_serde!(BandwidthSpec, BandwidthSpec::List);
string_or_list_serde!(LambdaSpec, LambdaSpec::List);

fn default_regularizer() -> Regularizer {
    Regularizer::Tikhonov
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

/// One test in an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub method: Method,
    #[serde(default)]
    pub kernel: KernelChoice,
    #[serde(default)]
    pub bandwidths: BandwidthSpec,
    #[serde(default)]
    pub lambdas: LambdaSpec,
    #[serde(default = "default_regularizer")]
    pub regularizer: Regularizer,
    /// Defaults to 60, raised to the smallest count at which the
    /// Bonferroni-adjusted grid test can reject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Per-method overrides of the experiment-level sizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            label: None,
            method,
            kernel: KernelChoice::default(),
            bandwidths: BandwidthSpec::default(),
            lambdas: LambdaSpec::default(),
            regularizer: default_regularizer(),
            permutations: None,
            c1: DEFAULT_C1,
            k_max: DEFAULT_K_MAX,
            m: None,
            m_ratio: None,
            s: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.to_string())
    }

    fn grid_cells(&self) -> usize {
        let kernels = match self.kernel {
            KernelChoice::Gaussian => self.bandwidths.len_hint(),
            KernelChoice::Spline => 1,
        };
        kernels * self.lambdas.values().map(|v| v.len()).unwrap_or(1)
    }

    pub fn resolved_permutations(&self, alpha: f64) -> usize {
        match self.method {
            Method::Srpt => {
                self.permutations.unwrap_or_else(|| DEFAULT_PERMUTATIONS.max(min_permutations(alpha / self.grid_cells() as f64)))
            }
            _ => self.permutations.unwrap_or(DEFAULT_PERMUTATIONS.max(min_permutations(alpha))),
        }
    }

    pub fn kernels(&self, x: &Sample, x0: &Sample) -> Result<Vec<Kernel>> {
        match self.kernel {
            KernelChoice::Spline => Ok(vec![Kernel::PeriodicSpline]),
            KernelChoice::Gaussian => self.bandwidths.resolve(x, x0)?.into_iter().map(Kernel::gaussian).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let who = self.label();
        self.bandwidths.validate()?;
        self.lambdas.values()?;
        if self.permutations == Some(0) {
            return Err(config_err(format!("{who}: permutations must be at least 1")));
        }
        if self.c1.is_nan() || self.c1 < DEFAULT_C1 {
            return Err(config_err(format!("{who}: c1 must be at least {DEFAULT_C1}")));
        }
        if self.k_max == 0 {
            return Err(config_err(format!("{who}: k_max must be at least 1")));
        }
        if let Some(r) = self.m_ratio {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(config_err(format!("{who}: m_ratio must be >= 1, got {r}")));
            }
        }
        if self.s.is_some_and(|s| s < 2) {
            return Err(config_err(format!("{who}: s must be at least 2")));
        }
        if self.method == Method::Oracle && self.kernel != KernelChoice::Spline {
            return Err(config_err(format!("{who}: the oracle test needs kernel = \"spline\"")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// `n` or a parameter of the alternative's shorthand (e.g. `p`, `shift`, `scale`, `k`).
    pub parameter: String,
    pub values: Vec<f64>,
}

fn default_reps() -> usize {
    DEFAULT_REPS
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_s() -> usize {
    DEFAULT_S
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<String>,
    pub null: DistributionSpec,
    pub alternative: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ratio: Option<f64>,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub record_timing: bool,
    pub methods: Vec<MethodConfig>,
}

/// One point of a sweep, with the alternative and sizes it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
    pub alternative: DistributionSpec,
    pub n: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn panel_name(&self) -> String {
        self.panel.clone().unwrap_or_default()
    }

    pub fn m_for(&self, method: &MethodConfig, n: usize) -> usize {
        if let Some(m) = method.m {
            m
        } else if let Some(r) = method.m_ratio {
            (r * n as f64).round() as usize
        } else if let Some(m) = self.m {
            m
        } else {
            (self.m_ratio.unwrap_or(1.0) * n as f64).round() as usize
        }
    }

    pub fn s_for(&self, method: &MethodConfig) -> usize {
        method.s.unwrap_or(self.s)
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![SweepPoint {
                parameter: String::new(),
                value: 0.0,
                alternative: self.alternative.clone(),
                n: self.n,
            }]);
        };
        sweep
            .values
            .iter()
            .map(|&value| {
                if sweep.parameter == "n" {
                    if !(value >= 2.0 && value.fract() == 0.0) {
                        return Err(config_err(format!("sweep over n needs integers >= 2, got {value}")));
                    }
                    Ok(SweepPoint { parameter: "n".into(), value, alternative: self.alternative.clone(), n: value as usize })
                } else {
                    let alternative = self
                        .alternative
                        .with_param(&sweep.parameter, value)
                        .map_err(|e| config_err(format!("sweep parameter '{}': {e}", sweep.parameter)))?;
                    Ok(SweepPoint { parameter: sweep.parameter.clone(), value, alternative, n: self.n })
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.null.validate()?;
        self.alternative.validate()?;
        if self.null.dim() != self.alternative.dim() {
            return Err(config_err(format!(
                "null ({}) and alternative ({}) have different dimensions",
                self.null, self.alternative
            )));
        }
        if self.reps == 0 {
            return Err(config_err("reps must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_err(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.s < 2 {
            return Err(config_err("s must be at least 2"));
        }
        if self.m.is_some() && self.m_ratio.is_some() {
            return Err(config_err("set at most one of m and m_ratio"));
        }
        if let Some(r) = self.m_ratio {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(config_err(format!("m_ratio must be >= 1, got {r}")));
            }
        }
        if self.methods.is_empty() {
            return Err(config_err("at least one method is required"));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(config_err("sweep has no values"));
            }
        }
        let mut labels = std::collections::HashSet::new();
        for method in &self.methods {
            method.validate()?;
            if !labels.insert(method.label()) {
                return Err(config_err(format!("duplicate method label '{}'", method.label())));
            }
        }
        for point in self.points()? {
            if point.n < 2 {
                return Err(config_err("n must be at least 2"));
            }
            point.alternative.validate()?;
            for method in &self.methods {
                if self.m_for(method, point.n) < 2 {
                    return Err(config_err(format!("{}: m must be at least 2", method.label())));
                }
            }
        }
        Ok(())
    }
}
