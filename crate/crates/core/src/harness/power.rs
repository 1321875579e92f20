//! Monte-Carlo size and power estimation.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{GofError, Result};
use crate::hypothesis::{
    adaptive_srct, adaptive_srpt, energy_perm_test, mmd_test, oracle_test, srct, srpt, GridResult, Method, TestOutcome,
};
use crate::kernels::Kernel;
use crate::pooled::PermutationPlan;
use crate::rng::{derive_key, substream, tag};
use crate::sample::Sample;
use crate::statistics::{ClosedFormNull, SplineSpectrum};

use super::config::{ExperimentConfig, MethodConfig};

fn is_uniform_unit_interval(null: &DistributionSpec) -> bool {
    matches!(
        null,
        DistributionSpec::UniformCube { dim: 1 } | DistributionSpec::PerturbedUniform { dim: 1, perturbations: 0, .. }
    )
}

/// Runs one configured test. `x0` and `y0` are used as given; `seed` drives the permutations.
pub fn run_method(
    cfg: &MethodConfig,
    null: &DistributionSpec,
    alpha: f64,
    x: &Sample,
    x0: &Sample,
    y0: &Sample,
    seed: u64,
) -> Result<TestOutcome> {
    let lambdas = cfg.lambdas.values()?;
    let reg = cfg.regularizer;
    match cfg.method {
        Method::Srct | Method::Srpt => {
            let kernels = cfg.kernels(x, x0)?;
            let single = kernels.len() == 1 && lambdas.len() == 1;
            if cfg.method == Method::Srct {
                if single {
                    srct(x, x0, y0, &kernels[0], reg, lambdas[0], alpha, cfg.c1)
                } else {
                    adaptive_srct(x, x0, y0, &kernels, reg, &lambdas, alpha, cfg.c1)
                }
            } else {
                let plan = PermutationPlan::new(cfg.resolved_permutations(alpha), seed)?;
                if single {
                    srpt(x, x0, y0, &kernels[0], reg, lambdas[0], alpha, &plan)
                } else {
                    adaptive_srpt(x, x0, y0, &kernels, reg, &lambdas, alpha, &plan)
                }
            }
        }
        Method::Oracle => {
            if !is_uniform_unit_interval(null) {
                return Err(GofError::MissingClosedForm(format!(
                    "the oracle test needs the uniform null on [0, 1], got {null}"
                )));
            }
            let spectrum = SplineSpectrum { k_max: cfg.k_max };
            if lambdas.len() == 1 {
                return oracle_test(x, reg, lambdas[0], alpha, spectrum);
            }
            // union bound over the λ grid
            let level = alpha / lambdas.len() as f64;
            let cells = lambdas
                .iter()
                .map(|&l| {
                    oracle_test(x, reg, l, level, spectrum).map(|o| GridResult {
                        lambda: l,
                        kernel: Kernel::PeriodicSpline.label(),
                        statistic: o.statistic,
                        critical_value: o.critical_value,
                        reject: o.reject,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TestOutcome::aggregate(Method::Oracle, alpha, cells))
        }
        Method::Mmd => {
            let kernels = cfg.kernels(x, x0)?;
            if kernels.len() != 1 {
                return Err(GofError::Config("the mmd test takes a single kernel (use bandwidths = \"median\" or one value)".into()));
            }
            let closed = ClosedFormNull::for_pair(&kernels[0], null)?;
            mmd_test(x, &kernels[0], &closed, alpha)
        }
        Method::EnergyPerm => energy_perm_test(x, x0, alpha, &PermutationPlan::new(cfg.resolved_permutations(alpha), seed)?),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub panel: String,
    pub parameter: String,
    pub value: f64,
    pub method: String,
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
    /// Seconds spent in the method summed over replicates; empty unless timing is recorded.
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

/// √(p̂(1 - p̂)/R).
pub fn standard_error(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

impl PowerTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row).map_err(|e| GofError::Data(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<PowerRow>, _>>().map_err(|e| GofError::Data(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| GofError::Data(e.to_string()))
    }

    pub fn rate(&self, panel: &str, method: &str, value: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.panel == panel && r.method == method && r.value == value).map(|r| r.rate)
    }

    pub fn extend(&mut self, other: PowerTable) {
        self.rows.extend(other.rows);
    }
}

struct Replicate {
    rejects: Vec<bool>,
    seconds: Vec<f64>,
}

fn replicate(cfg: &ExperimentConfig, point_idx: usize, point: &super::config::SweepPoint, rep: usize) -> Result<Replicate> {
    let path = |t: u64| [t, point_idx as u64, rep as u64];
    let max_m = cfg.methods.iter().map(|mc| cfg.m_for(mc, point.n)).max().unwrap_or(2);
    let max_s = cfg.methods.iter().map(|mc| cfg.s_for(mc)).max().unwrap_or(2);
    let x = point.alternative.sample(point.n, &mut substream(cfg.seed, &path(tag::DATA_X)))?;
    let x0_all = cfg.null.sample(max_m, &mut substream(cfg.seed, &path(tag::DATA_NULL_MEAN)))?;
    let y0_all = cfg.null.sample(max_s, &mut substream(cfg.seed, &path(tag::DATA_NULL_COV)))?;
    let mut out = Replicate { rejects: Vec::new(), seconds: Vec::new() };
    for (mi, mc) in cfg.methods.iter().enumerate() {
        let x0 = x0_all.head(cfg.m_for(mc, point.n));
        let y0 = y0_all.head(cfg.s_for(mc));
        let seed = derive_key(cfg.seed, &[tag::METHOD, point_idx as u64, rep as u64, mi as u64]);
        let start = Instant::now();
        let outcome = run_method(mc, &cfg.null, cfg.alpha, &x, &x0, &y0, seed)
            .map_err(|e| match e {
                GofError::Config(_) | GofError::MissingClosedForm(_) => e,
                other => GofError::Data(format!("{} at {}={}, replicate {rep}: {other}", mc.label(), point.parameter, point.value)),
            })?;
        out.seconds.push(start.elapsed().as_secs_f64());
        out.rejects.push(outcome.reject);
    }
    Ok(out)
}

/// Runs every sweep point with `cfg.reps` replicates, in parallel on the
/// current rayon pool. Results do not depend on the number of threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PowerTable> {
    cfg.validate()?;
    for mc in &cfg.methods {
        if mc.method == Method::Mmd {
            let kernel = match mc.kernel {
                super::config::KernelChoice::Spline => Kernel::PeriodicSpline,
                super::config::KernelChoice::Gaussian => Kernel::gaussian(1.0)?,
            };
            ClosedFormNull::for_pair(&kernel, &cfg.null)?;
        }
    }
    let mut table = PowerTable::default();
    for (pi, point) in cfg.points()?.iter().enumerate() {
        let reps: Vec<Replicate> =
            (0..cfg.reps).into_par_iter().map(|r| replicate(cfg, pi, point, r)).collect::<Result<Vec<_>>>()?;
        for (mi, mc) in cfg.methods.iter().enumerate() {
            let hits = reps.iter().filter(|r| r.rejects[mi]).count();
            let rate = hits as f64 / cfg.reps as f64;
            table.rows.push(PowerRow {
                panel: cfg.panel_name(),
                parameter: point.parameter.clone(),
                value: point.value,
                method: mc.label(),
                rate,
                se: standard_error(rate, cfg.reps),
                reps: cfg.reps,
                wall_time: cfg.record_timing.then(|| reps.iter().map(|r| r.seconds[mi]).sum()),
            });
        }
    }
    Ok(table)
}

/// Same as [`run_experiment`] on a dedicated pool; `threads = 1` runs serially.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<PowerTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| GofError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
null = "uniform:d=1"
alternative = "perturbed:d=1,p=1"
n = 40
m_ratio = 2
s = 30
reps = 12
seed = 3
[sweep]
parameter = "p"
values = [1, 3]
[[methods]]
method = "srpt"
kernel = "spline"
lambdas = 1e-3
[[methods]]
method = "oracle"
kernel = "spline"
lambdas = 1e-3
[[methods]]
method = "mmd"
kernel = "spline"
[[methods]]
method = "energy-perm"
[[methods]]
method = "srct"
bandwidths = "auto:0.5:1"
lambdas = [1e-2, 1]
"#,
        )
        .unwrap()
    }

    #[test]
    fn table_shape_and_csv_round_trip() {
        let mut cfg = small_config();
        cfg.record_timing = true;
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), 10);
        for r in &t.rows {
            assert!((0.0..=1.0).contains(&r.rate));
            assert_eq!(r.se, standard_error(r.rate, 12));
            assert!(r.wall_time.is_some());
        }
        let back = PowerTable::read_csv(t.to_csv_string().unwrap().as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let cfg = small_config();
        let a = run_experiment_with_threads(&cfg, 1).unwrap().to_csv_string().unwrap();
        let b = run_experiment_with_threads(&cfg, 3).unwrap().to_csv_string().unwrap();
        assert_eq!(a, b);
        assert!(!a.lines().nth(1).unwrap().ends_with(",0"), "wall_time column should be empty");
    }

    #[test]
    fn missing_closed_form_fails_before_running() {
        let mut cfg = small_config();
        cfg.null = "gaussian:d=1".parse().unwrap();
        cfg.alternative = "gaussian:d=1".parse().unwrap();
        cfg.sweep = None;
        cfg.methods.retain(|m| m.method == Method::Mmd);
        assert!(matches!(run_experiment(&cfg), Err(GofError::MissingClosedForm(_))));
    }

    #[test]
    fn standard_error_formula() {
        assert_eq!(standard_error(0.5, 100), 0.05);
        assert_eq!(standard_error(0.0, 10), 0.0);
    }
}
