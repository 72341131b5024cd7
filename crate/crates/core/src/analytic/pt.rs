use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::bloch::BlochParams;
use crate::error::{config, Result};
use crate::model::{SystemParams, C64};

pub const MIN_K_SAMPLES: usize = 64;

/// Eigenvalues of H_k at one sampled momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PTSample {
    pub k: Vec<f64>,
    pub eigenvalues: [C64; 2],
    /// The pair is real after removing the common shift (Δε − iγ/2)/2.
    pub unbroken: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PTClassification {
    pub samples: Vec<PTSample>,
    /// Unbroken at every sampled momentum.
    pub all_unbroken: bool,
    /// min_k |A_k| over the whole zone (|Ω/2 − g√N| in 1D).
    pub min_coupling: f64,
    /// Ω/2 exceeds the summed inter-cell hoppings.
    pub intra_dominates: bool,
}

/// Roots of λ² − cλ − |A|² with c = Δε − iγ/2.
pub fn bloch_eigenvalues(a: C64, c: C64) -> [C64; 2] {
    let root = (c * c + 4.0 * a.norm_sqr()).sqrt();
    [(c + root) * 0.5, (c - root) * 0.5]
}

/// Spectrum of H_k on a uniform grid of `k_samples` points per dimension,
/// symmetric under k → −k.
pub fn pt_spectrum(params: &SystemParams, k_samples: usize) -> Result<PTClassification> {
    if k_samples < MIN_K_SAMPLES {
        return config(format!("k_samples must be at least {MIN_K_SAMPLES}"));
    }
    let bloch = BlochParams::from_system(params)?;
    let d = bloch.dimension();
    let c = C64::new(bloch.detuning, -bloch.decay / 2.0);
    let axis: Vec<f64> = (0..k_samples)
        .map(|j| -PI + TAU * j as f64 / k_samples as f64)
        .collect();
    let total = k_samples.pow(d as u32);
    let mut samples = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let k: Vec<f64> = (0..d)
            .map(|_| {
                let kk = axis[rest % k_samples];
                rest /= k_samples;
                kk
            })
            .collect();
        let a = bloch.coupling(&k);
        let eigenvalues = bloch_eigenvalues(a, c);
        let s = c * c + 4.0 * a.norm_sqr();
        let scale = c.norm_sqr() + 4.0 * a.norm_sqr();
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let unbroken = s.im.abs() <= tol && s.re >= -tol;
        samples.push(PTSample {
            k,
            eigenvalues,
            unbroken,
        });
    }
    let largest = bloch.inter.iter().copied().fold(bloch.v, f64::max);
    let sum: f64 = bloch.v + bloch.inter.iter().sum::<f64>();
    Ok(PTClassification {
        all_unbroken: samples.iter().all(|s| s.unbroken),
        samples,
        min_coupling: (2.0 * largest - sum).max(0.0),
        intra_dominates: bloch.v > bloch.inter.iter().sum::<f64>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_limit_is_unbroken() {
        let p = SystemParams::one_d(1.0, 3.0, 0.0, 0.0, 0.0, 4);
        let pt = pt_spectrum(&p, 64).unwrap();
        assert!(pt.all_unbroken);
        for s in &pt.samples {
            let a = BlochParams::from_system(&p).unwrap().coupling(&s.k).norm();
            assert!((s.eigenvalues[0].re - a).abs() < 1e-12);
            assert!((s.eigenvalues[1].re + a).abs() < 1e-12);
        }
        assert!((pt.min_coupling - 0.5).abs() < 1e-15);
    }

    #[test]
    fn broken_when_coupling_below_quarter_gamma() {
        // g = 1, N = 4, γ = 4: broken somewhere iff |Ω/2 − 2| < 1
        let broken = |omega: f64| {
            let p = SystemParams::one_d(1.0, omega, 0.0, 4.0, 0.0, 4);
            !pt_spectrum(&p, 256).unwrap().all_unbroken
        };
        assert!(broken(4.0));
        assert!(broken(5.0));
        assert!(!broken(6.5));
        assert!(!broken(1.5));
    }
}
