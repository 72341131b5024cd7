use serde::{Deserialize, Serialize};

use super::params::SystemParams;
use crate::error::{config, Result};

/// Qubit state labelling the two sites of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    /// Non-decay site.
    Ground,
    /// Decay site.
    Excited,
}

impl Qubit {
    fn offset(self) -> usize {
        match self {
            Qubit::Ground => 0,
            Qubit::Excited => 1,
        }
    }
}

/// Qubit ⊗ truncated Fock ladders.
///
/// Flat index = qubit · Π M_α + row-major photon tuple, so all ground-state
/// amplitudes come first and the excited block follows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    truncations: Vec<usize>,
    strides: Vec<usize>,
    block: usize,
}

impl HilbertSpace {
    /// Space without the `N + 2` headroom check (useful for operator-level tests).
    pub fn new(truncations: Vec<usize>) -> Result<Self> {
        if truncations.is_empty() || truncations.len() > 2 {
            return config("one or two resonator modes are supported");
        }
        if truncations.iter().any(|&m| m < 2) {
            return config("each mode needs at least two Fock levels");
        }
        let mut strides = vec![1; truncations.len()];
        for a in (0..truncations.len() - 1).rev() {
            strides[a] = strides[a + 1] * truncations[a + 1];
        }
        let block = truncations.iter().product();
        Ok(Self {
            truncations,
            strides,
            block,
        })
    }

    pub fn for_params(params: &SystemParams, truncations: &[usize]) -> Result<Self> {
        params.validate()?;
        if truncations.len() != params.dimension() {
            return config(format!(
                "{} truncations given for a {}-mode system",
                truncations.len(),
                params.dimension()
            ));
        }
        let need = params.initial_photon as usize + 2;
        if let Some((mode, &m)) = truncations.iter().enumerate().find(|(_, &m)| m < need) {
            return config(format!(
                "truncation {m} on mode {mode} leaves no room above initial photon number {}",
                params.initial_photon
            ));
        }
        Self::new(truncations.to_vec())
    }

    pub fn modes(&self) -> usize {
        self.truncations.len()
    }

    pub fn truncations(&self) -> &[usize] {
        &self.truncations
    }

    /// Number of photon configurations (size of one qubit block).
    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn total_dim(&self) -> usize {
        2 * self.block
    }

    pub fn index(&self, qubit: Qubit, photons: &[usize]) -> usize {
        debug_assert_eq!(photons.len(), self.modes());
        qubit.offset() * self.block + self.photon_index(photons)
    }

    pub fn photon_index(&self, photons: &[usize]) -> usize {
        photons.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    pub fn try_index(&self, qubit: Qubit, photons: &[usize]) -> Option<usize> {
        if photons.len() != self.modes()
            || photons.iter().zip(&self.truncations).any(|(n, m)| n >= m)
        {
            return None;
        }
        Some(self.index(qubit, photons))
    }

    pub fn state(&self, index: usize) -> (Qubit, Vec<usize>) {
        assert!(index < self.total_dim(), "index {index} out of range");
        let qubit = if index < self.block {
            Qubit::Ground
        } else {
            Qubit::Excited
        };
        (qubit, self.photons(index % self.block))
    }

    /// Photon tuple of a position inside a qubit block.
    pub fn photons(&self, block_index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.truncations)
            .map(|(s, m)| (block_index / s) % m)
            .collect()
    }

    /// Photon number of mode `mode` at a position inside a qubit block.
    pub fn photon(&self, block_index: usize, mode: usize) -> usize {
        (block_index / self.strides[mode]) % self.truncations[mode]
    }

    pub fn excited_range(&self) -> std::ops::Range<usize> {
        self.block..2 * self.block
    }
}
