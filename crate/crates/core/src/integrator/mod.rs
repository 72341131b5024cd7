//! Time integration of the decay-conditioned dynamics.

mod adaptive;
mod evolve;
mod linalg;
mod montecarlo;
mod propagate;

pub use adaptive::{with_adaptive_truncation, MAX_TRUNCATION_GROWTH};
pub use evolve::{
    average_photon, lindblad_step, richardson_run, richardson_table, run_fixed_steps, run_to_decay,
    Checkpoint, DecayRecord, EvolutionConfig, RichardsonResult, StopReason,
};
pub use linalg::expm;
pub use montecarlo::{jump_monte_carlo, MonteCarloResult, TrajectoryConfig, MAX_JUMP_PROBABILITY};
pub use propagate::{DensityStepper, StateStepper, SCHEME_ORDER};
