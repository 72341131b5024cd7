//! Closed forms and contour-integral oracles of the constant-√N ladder.

mod bloch;
mod classical;
mod pt;
mod two_d;
mod winding;

pub use bloch::BlochParams;
pub use classical::{
    classical_decay_distribution, classical_displacement, classical_walk_oracle, BOUNDARY_TOL,
    MIN_SPAN,
};
pub use pt::{bloch_eigenvalues, pt_spectrum, PTClassification, PTSample, MIN_K_SAMPLES};
pub use two_d::{analytic_2d, analytic_displacement};
pub use winding::{
    contour_winding, threshold_displacement, winding_displacement, CRITICAL_MAGNITUDE,
    MIN_RESOLUTION,
};
