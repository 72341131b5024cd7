//! Truncated qubit ⊗ resonator Hilbert space, Hamiltonians and initial states.

mod hamiltonian;
mod initial;
mod operator;
mod params;
mod space;

pub use hamiltonian::{
    build_effective_hamiltonian, build_hamiltonian_org, excited_projector, lowering, sigma_plus,
    sigma_z,
};
pub use initial::{
    build_initial_state, coherent_amplitudes, initial_state_vector, poisson_weights, InitialKind,
    COHERENT_TRUNCATION_TOL,
};
pub use operator::{DensityMatrix, OperatorMatrix, SparseRows, C64};
pub use params::{default_truncation, SystemParams};
pub use space::{HilbertSpace, Qubit};

use crate::error::Result;

/// Hilbert space for `params` with explicit per-mode truncations.
pub fn build_hilbert_space(params: &SystemParams, truncations: &[usize]) -> Result<HilbertSpace> {
    HilbertSpace::for_params(params, truncations)
}

/// Hilbert space using [`default_truncation`] on every mode unless overridden.
pub fn hilbert_space_with_default(
    params: &SystemParams,
    truncation: Option<&[usize]>,
) -> Result<HilbertSpace> {
    match truncation {
        Some(t) => HilbertSpace::for_params(params, t),
        None => {
            let m = default_truncation(params.initial_photon, params.dimension());
            HilbertSpace::for_params(params, &vec![m; params.dimension()])
        }
    }
}
