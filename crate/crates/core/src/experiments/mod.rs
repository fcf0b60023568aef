//! Datasets, metrics, baselines and the experiment drivers.

pub mod baselines;
pub mod dataset;
pub mod eval;
pub mod metrics;
pub mod sweep;

pub use baselines::{baseline_random_phi, ls_solution};
pub use dataset::{generate_dataset, generate_sample, generate_samples, ChannelRecord, Dataset, Sample, Split, SplitPlan};
pub use eval::{dl_solutions, evaluate, ls_solutions, EvalInputs, EvalReport, MethodResult, MethodTag, TestBench};
pub use metrics::{beamforming_mismatch, empirical_cdf, median, nmse};
pub use sweep::{pilot_power_sweep, write_sweep_csv, SweepRow, SweepSettings};
