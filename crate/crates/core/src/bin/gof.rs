use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srgof::error::GofError;
use srgof::harness::{self, BandwidthSpec, ExperimentConfig, KernelChoice, LambdaSpec, MethodConfig};
use srgof::rng::{substream, tag};
use srgof::{DistributionSpec, Method, Regularizer, Sample};

#[derive(Parser)]
#[command(name = "gof", version, about = "Spectral-regularized kernel goodness-of-fit tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test one sample against a null distribution and print the decision as JSON.
    Test(TestArgs),
    /// Estimate rejection rates for an experiment config and write a CSV table.
    Power(PowerArgs),
    /// Run a figure preset and write <fig>.csv and <fig>.svg.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, default_value = "srpt")]
    method: String,
    /// Null distribution, e.g. "gaussian:d=2" or "uniform:d=1".
    #[arg(long)]
    null: String,
    /// Sample CSV: one point per row, optional `# dim=d` comment.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// median, auto, auto:<w_L>:<w_U> or a comma-separated list.
    #[arg(long, default_value = "median")]
    bandwidths: String,
    /// <lo>:<hi> doubling grid or a comma-separated list.
    #[arg(long, default_value = "1e-6:5")]
    lambdas: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Defaults to 60, raised to the smallest count at which the grid test can reject.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long, default_value_t = 100)]
    s: usize,
    #[arg(long, default_value_t = 3.0)]
    m_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "tikhonov")]
    regularizer: String,
    #[arg(long, default_value_t = 65.0)]
    c1: f64,
    #[arg(long, default_value_t = 1024)]
    k_max: usize,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the replicate count of the config.
    #[arg(long)]
    reps: Option<usize>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs serially. Defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Fill the wall_time column.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct ReproduceArgs {
    /// fig1 … fig6
    figure: String,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated covariance sample sizes; one panel per value.
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<usize>>,
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_code(err: &GofError) -> u8 {
    match err {
        GofError::Config(_) | GofError::InvalidParameter(_) | GofError::MissingClosedForm(_) => 2,
        _ => 3,
    }
}

fn config<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> Result<T, GofError> {
    r.map_err(|e| GofError::Config(e.to_string()))
}

fn run_test(a: TestArgs) -> Result<(), GofError> {
    let method: Method = config(a.method.parse())?;
    let null: DistributionSpec = config(a.null.parse())?;
    let mut mc = MethodConfig::new(method);
    mc.kernel = config(a.kernel.parse::<KernelChoice>())?;
    mc.bandwidths = config(a.bandwidths.parse::<BandwidthSpec>())?;
    mc.lambdas = config(a.lambdas.parse::<LambdaSpec>())?;
    mc.regularizer = config(a.regularizer.parse::<Regularizer>())?;
    mc.permutations = a.permutations;
    mc.c1 = a.c1;
    mc.k_max = a.k_max;
    mc.m_ratio = Some(a.m_ratio);
    mc.validate()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(GofError::Config(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if a.s < 2 {
        return Err(GofError::Config("s must be at least 2".into()));
    }
    let file = File::open(&a.data).map_err(|e| GofError::Data(format!("{}: {e}", a.data.display())))?;
    let x = Sample::read_csv(BufReader::new(file))?;
    if x.dim() != null.dim() {
        return Err(GofError::Data(format!("data has dimension {} but the null {null} has {}", x.dim(), null.dim())));
    }
    let m = (a.m_ratio * x.len() as f64).round() as usize;
    let x0 = null.sample(m, &mut substream(a.seed, &[tag::DATA_NULL_MEAN]))?;
    let y0 = null.sample(a.s, &mut substream(a.seed, &[tag::DATA_NULL_COV]))?;
    let seed = srgof::rng::derive_key(a.seed, &[tag::METHOD]);
    let outcome = harness::run_method(&mc, &null, a.alpha, &x, &x0, &y0, seed)?;
    let text = serde_json::to_string_pretty(&outcome).map_err(|e| GofError::Data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run_power(a: PowerArgs) -> Result<(), GofError> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| GofError::Config(format!("{}: {e}", a.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    cfg.record_timing |= a.timings;
    let table = match a.threads {
        Some(t) => harness::run_experiment_with_threads(&cfg, t)?,
        None => harness::run_experiment(&cfg)?,
    };
    match a.out {
        Some(path) => table.write_csv(File::create(path)?)?,
        None => {
            let mut out = std::io::stdout().lock();
            table.write_csv(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn run_reproduce(a: ReproduceArgs) -> Result<(), GofError> {
    let out = harness::reproduce(&a.figure, &a.out_dir, a.reps, a.s_grid.as_deref(), a.threads)?;
    eprintln!("wrote {} and {}", out.csv_path.display(), out.plot_path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => run_test(a),
        Command::Power(a) => run_power(a),
        Command::Reproduce(a) => run_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gof: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
