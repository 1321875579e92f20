//! Monte-Carlo harness: experiment configuration, power tables, figure presets and plots.

pub mod config;
pub mod plot;
pub mod power;
pub mod presets;

pub use config::{BandwidthSpec, ExperimentConfig, KernelChoice, LambdaSpec, MethodConfig, Sweep};
pub use power::{run_experiment, run_experiment_with_threads, run_method, PowerRow, PowerTable};
pub use presets::{reproduce, FIGURES};
