use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::model::{SystemParams, C64};

/// Hoppings of the constant-√N ladder.
///
/// `A_k = v + Σ_α v_α e^{−ik_α}` couples the two sites of a unit cell in
/// momentum space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochParams {
    /// Intra-cell hopping Ω/2.
    pub v: f64,
    /// Inter-cell hoppings g_α√N.
    pub inter: Vec<f64>,
    pub detuning: f64,
    pub decay: f64,
}

impl BlochParams {
    pub fn new(v: f64, inter: Vec<f64>, detuning: f64, decay: f64) -> Result<Self> {
        let p = Self {
            v,
            inter,
            detuning,
            decay,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_system(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        Self::new(
            params.intra_hopping(),
            params.inter_hoppings(),
            params.detuning,
            params.qubit_decay,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.inter.is_empty() {
            return config("at least one inter-cell hopping is required");
        }
        let all = std::iter::once(self.v).chain(self.inter.iter().copied());
        for h in all {
            if !(h.is_finite() && h >= 0.0) {
                return config(format!("hoppings must be finite and non-negative, got {h}"));
            }
        }
        if !self.detuning.is_finite() || !(self.decay.is_finite() && self.decay >= 0.0) {
            return config("detuning must be finite and decay non-negative");
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.inter.len()
    }

    /// A_k = v + Σ v_α e^{−ik_α}.
    pub fn coupling(&self, k: &[f64]) -> C64 {
        off_diagonal(self.v, &self.inter, k)
    }

    /// H_k = [[0, A_k], [A_k*, Δε − iγ/2]] in the (ground, excited) basis.
    pub fn hamiltonian(&self, k: &[f64]) -> [[C64; 2]; 2] {
        let a = self.coupling(k);
        [
            [C64::new(0.0, 0.0), a],
            [a.conj(), C64::new(self.detuning, -self.decay / 2.0)],
        ]
    }
}

pub(crate) fn off_diagonal(v: f64, inter: &[f64], k: &[f64]) -> C64 {
    inter.iter().zip(k).fold(C64::new(v, 0.0), |acc, (h, kk)| {
        acc + C64::from_polar(*h, -kk)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoppings_from_system() {
        let p = SystemParams::two_d(2.0, 1.0, 8.0, 0.0, 25.0, 0.0, 5);
        let b = BlochParams::from_system(&p).unwrap();
        assert_eq!(b.v, 4.0);
        assert!((b.inter[0] - 2.0 * 5f64.sqrt()).abs() < 1e-15);
        assert!((b.inter[1] - 5f64.sqrt()).abs() < 1e-15);
        let a = b.coupling(&[0.0, std::f64::consts::PI]);
        assert!((a.re - (4.0 + 5f64.sqrt())).abs() < 1e-14);
        assert!(BlochParams::new(-1.0, vec![1.0], 0.0, 1.0).is_err());
    }
}
