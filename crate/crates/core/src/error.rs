use thiserror::Error;

/// Everything that can go wrong while building or running a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("truncation too small on mode {mode}: top-level population {population:.3e} exceeds {tolerance:.1e}")]
    TruncationTooSmall {
        mode: usize,
        population: f64,
        tolerance: f64,
    },

    #[error("no convergence by t = {time}: surviving trace {surviving:.3e}")]
    NonConvergence { time: f64, surviving: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("critical point: {0}")]
    CriticalPoint(String),

    #[error("Richardson extrapolation did not converge; level table {table:?}")]
    RichardsonNonConvergence { table: Vec<Vec<f64>> },

    #[error("jump step too coarse: decay probability {probability:.3} per step exceeds 0.1")]
    JumpStepTooCoarse { probability: f64 },

    #[error("empty decay record")]
    EmptyRecord,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
