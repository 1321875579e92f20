//! Preset experiments mirroring the power studies: spline oracle comparison
//! (fig1), Gaussian shift (fig2) and scale (fig3), perturbed uniform (fig4),
//! von Mises-Fisher (fig5) and Watson mixture (fig6).

use std::path::{Path, PathBuf};

use crate::error::{GofError, Result};
use crate::hypothesis::Method;

use super::config::{BandwidthSpec, ExperimentConfig, KernelChoice, LambdaSpec, MethodConfig, Sweep, DEFAULT_REPS};
use super::plot::render_svg;
use super::power::{run_experiment, run_experiment_with_threads, PowerTable};

pub const FIGURES: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// λ used by the single-λ spline comparison.
pub const FIG1_LAMBDA: f64 = 1e-3;
/// Reduced λ grid for the aggregated tests in fig2–fig6.
pub const PRESET_LAMBDAS: [f64; 3] = [1e-5, 1e-3, 1e-1];

fn labelled(label: &str, mut m: MethodConfig) -> MethodConfig {
    m.label = Some(label.to_string());
    m
}

fn spline_method(method: Method, m_ratio: f64) -> MethodConfig {
    let mut m = MethodConfig::new(method);
    m.kernel = KernelChoice::Spline;
    m.lambdas = LambdaSpec::List(vec![FIG1_LAMBDA]);
    m.m_ratio = Some(m_ratio);
    m
}

/// Aggregated SRPT / SRCT, MMD and energy tests with Gaussian kernels.
fn comparison_methods(bandwidths: BandwidthSpec) -> Vec<MethodConfig> {
    let grid = |method| {
        let mut m = MethodConfig::new(method);
        m.bandwidths = bandwidths.clone();
        m.lambdas = LambdaSpec::List(PRESET_LAMBDAS.to_vec());
        m
    };
    vec![
        grid(Method::Srpt),
        grid(Method::Srct),
        MethodConfig::new(Method::Mmd),
        MethodConfig::new(Method::EnergyPerm),
    ]
}

fn base(panel: String, null: &str, alternative: &str, parameter: &str, values: &[f64], n: usize) -> ExperimentConfig {
    ExperimentConfig {
        panel: Some(panel),
        null: null.parse().expect("preset null spec"),
        alternative: alternative.parse().expect("preset alternative spec"),
        sweep: Some(Sweep { parameter: parameter.into(), values: values.to_vec() }),
        n,
        m: None,
        m_ratio: Some(3.0),
        s: 100,
        reps: DEFAULT_REPS,
        alpha: 0.05,
        seed: 20_240_601,
        record_timing: false,
        methods: Vec::new(),
    }
}

/// The experiment panels of a figure at the default 200 replicates.
pub fn figure_panels(figure: &str) -> Result<Vec<ExperimentConfig>> {
    let narrow = BandwidthSpec::Auto { lo: 0.25, hi: 1.0 };
    let panels = match figure {
        "fig1" => {
            let mut cfg = base("d=1, n=500".into(), "uniform:d=1", "perturbed:d=1,p=1", "p", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 500);
            cfg.methods = vec![
                labelled("oracle", spline_method(Method::Oracle, 1.0)),
                labelled("srpt(m=n)", spline_method(Method::Srpt, 1.0)),
                labelled("srpt(m=3n)", spline_method(Method::Srpt, 3.0)),
            ];
            vec![cfg]
        }
        "fig2" | "fig3" => [1usize, 5, 10]
            .iter()
            .map(|&d| {
                let null = format!("gaussian:d={d}");
                let mut cfg = if figure == "fig2" {
                    base(format!("d={d}"), &null, &null, "shift", &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5], 200)
                } else {
                    base(format!("d={d}"), &null, &null, "scale", &[1.0, 1.25, 1.5, 1.75, 2.0], 200)
                };
                cfg.methods = comparison_methods(narrow.clone());
                cfg
            })
            .collect(),
        "fig4" => [(1usize, 500usize), (2, 2000)]
            .iter()
            .map(|&(d, n)| {
                let mut cfg = base(
                    format!("d={d}, n={n}"),
                    &format!("uniform:d={d}"),
                    &format!("perturbed:d={d},p=1"),
                    "p",
                    &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                    n,
                );
                cfg.methods = comparison_methods(BandwidthSpec::Auto { lo: 0.0625, hi: 1.0 });
                cfg
            })
            .collect(),
        "fig5" => {
            let mut cfg = base("d=3".into(), "sphere:d=3", "vmf:d=3,k=0", "k", &[0.0, 0.05, 0.1, 0.15, 0.2, 0.25], 500);
            cfg.methods = comparison_methods(narrow);
            vec![cfg]
        }
        "fig6" => {
            let mut cfg = base("d=3".into(), "sphere:d=3", "watson:d=3,k=0", "k", &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5], 500);
            cfg.methods = comparison_methods(narrow);
            vec![cfg]
        }
        other => {
            return Err(GofError::Config(format!("unknown figure '{other}' (expected one of {})", FIGURES.join(", "))))
        }
    };
    Ok(panels)
}

/// Panels with optional replicate override and one copy per covariance sample size.
pub fn configure(figure: &str, reps: Option<usize>, s_grid: Option<&[usize]>) -> Result<Vec<ExperimentConfig>> {
    let mut panels = figure_panels(figure)?;
    if let Some(r) = reps {
        panels.iter_mut().for_each(|p| p.reps = r);
    }
    if let Some(grid) = s_grid {
        panels = panels
            .into_iter()
            .flat_map(|p| {
                grid.iter().map(move |&s| {
                    let mut q = p.clone();
                    q.s = s;
                    q.panel = Some(format!("{}, s={s}", p.panel_name()));
                    q
                })
            })
            .collect();
    }
    for p in &panels {
        p.validate()?;
    }
    Ok(panels)
}

pub struct Reproduction {
    pub table: PowerTable,
    pub csv_path: PathBuf,
    pub plot_path: PathBuf,
}

/// Runs a figure preset and writes `<figure>.csv` and `<figure>.svg` into `out_dir`.
pub fn reproduce(
    figure: &str,
    out_dir: &Path,
    reps: Option<usize>,
    s_grid: Option<&[usize]>,
    threads: Option<usize>,
) -> Result<Reproduction> {
    let panels = configure(figure, reps, s_grid)?;
    let mut table = PowerTable::default();
    for cfg in &panels {
        log::info!("{figure}: running panel '{}' with {} replicates", cfg.panel_name(), cfg.reps);
        table.extend(match threads {
            Some(t) => run_experiment_with_threads(cfg, t)?,
            None => run_experiment(cfg)?,
        });
    }
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{figure}.csv"));
    let plot_path = out_dir.join(format!("{figure}.svg"));
    table.write_csv(std::fs::File::create(&csv_path)?)?;
    std::fs::write(&plot_path, render_svg(&table, figure))?;
    Ok(Reproduction { table, csv_path, plot_path })
}
