//! Experiment harness around the `invgp` library: synthetic-data
//! generation following the reference experiment setups, replicate
//! orchestration with machine-readable CSV/JSON outputs, and the
//! phase-transition grid.

pub mod config;
pub mod experiment;
pub mod phase;
pub mod sim;
pub mod truth;

pub use config::{ExperimentConfig, OperatorChoice, PriorChoice, SchemeChoice, TruthChoice};
pub use experiment::{run_experiment, write_run_outputs, RunRecord};
pub use phase::{phase_grid, PhaseGrid};
pub use sim::{derive_seed, generate_data, SeedPurpose};
pub use truth::{make_truth, TruthRecipe};
