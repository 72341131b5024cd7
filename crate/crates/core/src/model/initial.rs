use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::operator::{DensityMatrix, C64};
use super::space::{HilbertSpace, Qubit};
use crate::error::{config, Result};

/// Resonator preparation; the qubit always starts in the non-decay state |g⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Fock,
    Coherent,
}

impl InitialKind {
    pub fn name(self) -> &'static str {
        match self {
            InitialKind::Fock => "fock",
            InitialKind::Coherent => "coherent",
        }
    }
}

/// Largest truncation loss tolerated for a coherent preparation.
pub const COHERENT_TRUNCATION_TOL: f64 = 1e-6;

/// Number-basis amplitudes of |α⟩ with α = √N (real, positive), before renormalization.
pub fn coherent_amplitudes(n_mean: u32, levels: usize) -> Vec<f64> {
    let mean = n_mean as f64;
    if n_mean == 0 {
        let mut v = vec![0.0; levels];
        v[0] = 1.0;
        return v;
    }
    let ln_mean = mean.ln();
    let mut log_amp = -mean / 2.0;
    let mut out = Vec::with_capacity(levels);
    for n in 0..levels {
        if n > 0 {
            log_amp += 0.5 * (ln_mean - (n as f64).ln());
        }
        out.push(log_amp.exp());
    }
    out
}

/// Poisson weights |⟨n|α⟩|² on the truncated ladder.
pub fn poisson_weights(n_mean: u32, levels: usize) -> Vec<f64> {
    coherent_amplitudes(n_mean, levels)
        .into_iter()
        .map(|a| a * a)
        .collect()
}

/// State vector of the preparation (the state is always pure).
pub fn initial_state_vector(
    kind: InitialKind,
    n: u32,
    space: &HilbertSpace,
) -> Result<Array1<C64>> {
    let n_usize = n as usize;
    if space.truncations().iter().any(|&m| m <= n_usize) {
        return config(format!(
            "initial photon number {n} lies outside the truncation"
        ));
    }
    let mut psi = Array1::zeros(space.total_dim());
    match kind {
        InitialKind::Fock => {
            let photons = vec![n_usize; space.modes()];
            psi[space.index(Qubit::Ground, &photons)] = C64::new(1.0, 0.0);
        }
        InitialKind::Coherent => {
            let per_mode: Vec<Vec<f64>> = space
                .truncations()
                .iter()
                .map(|&m| coherent_amplitudes(n, m))
                .collect();
            for (mode, amps) in per_mode.iter().enumerate() {
                let kept: f64 = amps.iter().map(|a| a * a).sum();
                if 1.0 - kept > COHERENT_TRUNCATION_TOL {
                    return config(format!(
                        "coherent state loses {:.2e} of its weight to truncation on mode {mode}",
                        1.0 - kept
                    ));
                }
            }
            for b in 0..space.block_size() {
                let amp: f64 = (0..space.modes())
                    .map(|mode| per_mode[mode][space.photon(b, mode)])
                    .product();
                psi[b] = C64::new(amp, 0.0);
            }
            let norm = psi.iter().map(|z: &C64| z.norm_sqr()).sum::<f64>().sqrt();
            psi.mapv_inplace(|z| z / norm);
        }
    }
    Ok(psi)
}

pub fn build_initial_state(
    kind: InitialKind,
    n: u32,
    space: &HilbertSpace,
) -> Result<DensityMatrix> {
    let psi = initial_state_vector(kind, n, space)?;
    Ok(DensityMatrix::pure(space, &psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ln n! from the Stirling series; independent of the recursive amplitudes.
    fn ln_factorial_stirling(n: f64) -> f64 {
        n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n)
            - 1.0 / (360.0 * n.powi(3))
            + 1.0 / (1260.0 * n.powi(5))
    }

    #[test]
    fn poisson_weight_at_mean() {
        let w = poisson_weights(100, 320);
        let oracle = (100.0 * 100f64.ln() - 100.0 - ln_factorial_stirling(100.0)).exp();
        assert!((w[100] - oracle).abs() < 1e-14, "{} vs {}", w[100], oracle);
        assert!((w[100] - 0.0399).abs() < 1e-4);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fock_states() {
        let s = HilbertSpace::new(vec![10]).unwrap();
        for n in [0u32, 5] {
            let rho = build_initial_state(InitialKind::Fock, n, &s).unwrap();
            let k = s.index(Qubit::Ground, &[n as usize]);
            assert_eq!(rho.matrix()[[k, k]], C64::new(1.0, 0.0));
            assert!((rho.trace() - 1.0).abs() < 1e-15);
            assert_eq!(rho.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);
        }
    }

    #[test]
    fn coherent_is_rank_one_with_coherences() {
        let s = HilbertSpace::new(vec![40, 40]).unwrap();
        let rho = build_initial_state(InitialKind::Coherent, 5, &s).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let a = s.index(Qubit::Ground, &[5, 5]);
        let b = s.index(Qubit::Ground, &[4, 6]);
        assert!(rho.matrix()[[a, b]].norm() > 1e-3);
        assert!(rho.as_pure_state(1e-12).is_some());
        assert!(rho.excited_populations().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn coherent_truncation_guard() {
        let s = HilbertSpace::new(vec![110]).unwrap();
        assert!(build_initial_state(InitialKind::Coherent, 100, &s).is_err());
        assert!(build_initial_state(InitialKind::Fock, 100, &s).is_ok());
    }
}
