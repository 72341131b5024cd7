use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Physical rates and couplings of the driven qubit-resonator system.
///
/// All rates are dimensionless multiples of the first coupling `g`
/// (which sets the unit of rate when it is 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Qubit-resonator couplings, one per resonator mode (walk dimension).
    pub couplings: Vec<f64>,
    /// Rabi frequency of the classical drive.
    pub drive: f64,
    /// Qubit-resonator detuning.
    pub detuning: f64,
    /// Decay rate of the excited qubit state.
    pub qubit_decay: f64,
    /// Pure dephasing rate of the qubit.
    pub qubit_dephase: f64,
    /// Starting unit (photon number in every mode).
    pub initial_photon: u32,
}

impl SystemParams {
    pub fn one_d(g: f64, drive: f64, detuning: f64, gamma: f64, dephase: f64, n: u32) -> Self {
        Self {
            couplings: vec![g],
            drive,
            detuning,
            qubit_decay: gamma,
            qubit_dephase: dephase,
            initial_photon: n,
        }
    }

    pub fn two_d(
        g1: f64,
        g2: f64,
        drive: f64,
        detuning: f64,
        gamma: f64,
        dephase: f64,
        n: u32,
    ) -> Self {
        Self {
            couplings: vec![g1, g2],
            drive,
            detuning,
            qubit_decay: gamma,
            qubit_dephase: dephase,
            initial_photon: n,
        }
    }

    pub fn dimension(&self) -> usize {
        self.couplings.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.dimension(), 1 | 2) {
            return config(format!(
                "dimension must be 1 or 2 (got {} couplings)",
                self.dimension()
            ));
        }
        let finite = self.couplings.iter().all(|g| g.is_finite())
            && self.drive.is_finite()
            && self.detuning.is_finite()
            && self.qubit_decay.is_finite()
            && self.qubit_dephase.is_finite();
        if !finite {
            return config("all rates must be finite");
        }
        if self.qubit_decay < 0.0 {
            return config("qubit_decay must be >= 0");
        }
        if self.qubit_dephase < 0.0 {
            return config("qubit_dephase must be >= 0");
        }
        if self.drive < 0.0 {
            return config("drive must be >= 0");
        }
        Ok(())
    }

    /// Intra-unit hopping v = Ω/2.
    pub fn intra_hopping(&self) -> f64 {
        self.drive / 2.0
    }

    /// Inter-unit hoppings g_α √N of the ladder approximation.
    pub fn inter_hoppings(&self) -> Vec<f64> {
        let root_n = (self.initial_photon as f64).sqrt();
        self.couplings.iter().map(|g| g * root_n).collect()
    }

    /// Horizontal axis used in the figures: Ω/2g in 1D, v/(v+v'+v'') in 2D.
    pub fn figure_abscissa(&self) -> f64 {
        if self.dimension() == 1 {
            if self.couplings[0] == 0.0 {
                f64::INFINITY
            } else {
                self.intra_hopping() / self.couplings[0]
            }
        } else {
            let v = self.intra_hopping();
            let total: f64 = v + self.inter_hoppings().iter().sum::<f64>();
            if total == 0.0 {
                0.0
            } else {
                v / total
            }
        }
    }

    /// Ω/(2 g₁ √N): the drive measured against the transition threshold.
    pub fn scaled_abscissa(&self) -> f64 {
        let threshold = self.couplings[0] * (self.initial_photon as f64).sqrt();
        if threshold == 0.0 {
            f64::INFINITY
        } else {
            self.intra_hopping() / threshold
        }
    }

    /// Largest coupling magnitude, falling back to 1 when every coupling is zero.
    pub fn rate_unit(&self) -> f64 {
        let g = self.couplings.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if g > 0.0 {
            g
        } else {
            1.0
        }
    }
}

/// Default per-mode truncation: room for the walker to wander above N.
///
/// Two-mode walks use a tighter margin since the joint space grows as M².
/// The leakage guard reports when either choice is too small.
pub fn default_truncation(n: u32, modes: usize) -> usize {
    let n = n as usize;
    let spread = ((n + 1) as f64).sqrt().ceil() as usize;
    if modes >= 2 {
        (n + 4 * spread + 7).max(12)
    } else {
        (n + 8 * spread + 8).max(16)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        let mut p = SystemParams::one_d(1.0, 2.0, 0.0, 4.0, 0.0, 5);
        assert!(p.validate().is_ok());
        p.qubit_decay = -1.0;
        assert!(p.validate().is_err());
        p.qubit_decay = 1.0;
        p.couplings = vec![1.0, 1.0, 1.0];
        assert!(p.validate().is_err());
        p.couplings = vec![];
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_truncation_values() {
        assert_eq!(default_truncation(0, 1), 16);
        assert_eq!(default_truncation(5, 1), 37);
        assert_eq!(default_truncation(100, 1), 196);
        assert_eq!(default_truncation(5, 2), 24);
    }

    #[test]
    fn abscissae() {
        let p = SystemParams::two_d(2.0, 1.0, 8.0, 0.0, 25.0, 0.0, 5);
        let root5 = 5f64.sqrt();
        assert!((p.figure_abscissa() - 8.0 / (8.0 + 2.0 * root5 * 3.0)).abs() < 1e-14);
        let q = SystemParams::one_d(1.0, 9.0, 0.0, 4.0, 0.0, 5);
        assert_eq!(q.figure_abscissa(), 4.5);
    }
}
