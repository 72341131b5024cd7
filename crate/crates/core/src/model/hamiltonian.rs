//! Effective non-Hermitian Hamiltonian of the driven qubit coupled to one or
//! two resonator modes:
//!
//! ```text
//! H = Σ_α g_α (σ⁺ a_α + σ⁻ a_α†) + (Ω/2)(σ⁺ + σ⁻) + (Δε/2) σᶻ − (iγ/2)|e⟩⟨e|
//! ```
//!
//! Ladder elements are the exact ⟨n−1|a|n⟩ = √n; the constant-√N ladder only
//! appears in the analytic module.

use super::operator::{OperatorMatrix, C64};
use super::params::SystemParams;
use super::space::{HilbertSpace, Qubit};
use crate::error::{config, Result};

pub fn build_effective_hamiltonian(
    params: &SystemParams,
    space: &HilbertSpace,
) -> Result<OperatorMatrix> {
    let mut h = build_hamiltonian_org(params, space)?;
    let decay = C64::new(0.0, -params.qubit_decay / 2.0);
    for i in space.excited_range() {
        h.add(i, i, decay);
    }
    Ok(h)
}

/// The Hermitian circuit-QED Hamiltonian without the decay term.
pub fn build_hamiltonian_org(
    params: &SystemParams,
    space: &HilbertSpace,
) -> Result<OperatorMatrix> {
    params.validate()?;
    if space.modes() != params.dimension() {
        return config("Hilbert space and parameters disagree on the number of modes");
    }
    let mut h = OperatorMatrix::zeros(space);
    let half_drive = C64::new(params.drive / 2.0, 0.0);
    let half_detuning = params.detuning / 2.0;
    for b in 0..space.block_size() {
        let n = space.photons(b);
        let g_idx = space.index(Qubit::Ground, &n);
        let e_idx = space.index(Qubit::Excited, &n);
        if half_drive.re != 0.0 {
            h.add(e_idx, g_idx, half_drive);
            h.add(g_idx, e_idx, half_drive);
        }
        if half_detuning != 0.0 {
            h.add(e_idx, e_idx, C64::new(half_detuning, 0.0));
            h.add(g_idx, g_idx, C64::new(-half_detuning, 0.0));
        }
        // σ⁺ a_α: |g, n⟩ → √n_α |e, n − 1_α⟩, plus the Hermitian partner.
        for (mode, &g) in params.couplings.iter().enumerate() {
            if n[mode] == 0 || g == 0.0 {
                continue;
            }
            let mut lower = n.clone();
            lower[mode] -= 1;
            let e_lower = space.index(Qubit::Excited, &lower);
            let amp = C64::new(g * (n[mode] as f64).sqrt(), 0.0);
            h.add(e_lower, g_idx, amp);
            h.add(g_idx, e_lower, amp);
        }
    }
    Ok(h)
}

/// Resonator lowering operator a_α (identity on the qubit).
pub fn lowering(space: &HilbertSpace, mode: usize) -> OperatorMatrix {
    let mut a = OperatorMatrix::zeros(space);
    for q in [Qubit::Ground, Qubit::Excited] {
        for b in 0..space.block_size() {
            let n = space.photons(b);
            if n[mode] == 0 {
                continue;
            }
            let mut lower = n.clone();
            lower[mode] -= 1;
            a.add(
                space.index(q, &lower),
                space.index(q, &n),
                C64::new((n[mode] as f64).sqrt(), 0.0),
            );
        }
    }
    a
}

/// σ⁺ = |e⟩⟨g| (identity on the resonators).
pub fn sigma_plus(space: &HilbertSpace) -> OperatorMatrix {
    let mut s = OperatorMatrix::zeros(space);
    for b in 0..space.block_size() {
        s.add(b + space.block_size(), b, C64::new(1.0, 0.0));
    }
    s
}

/// σᶻ = |e⟩⟨e| − |g⟩⟨g|.
pub fn sigma_z(space: &HilbertSpace) -> OperatorMatrix {
    let mut s = OperatorMatrix::zeros(space);
    for i in 0..space.total_dim() {
        let v = if i < space.block_size() { -1.0 } else { 1.0 };
        s.add(i, i, C64::new(v, 0.0));
    }
    s
}

/// Projector |e⟩⟨e|.
pub fn excited_projector(space: &HilbertSpace) -> OperatorMatrix {
    let mut s = OperatorMatrix::zeros(space);
    for i in space.excited_range() {
        s.add(i, i, C64::new(1.0, 0.0));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn space_for(p: &SystemParams, m: usize) -> HilbertSpace {
        HilbertSpace::for_params(p, &vec![m; p.dimension()]).unwrap()
    }

    #[test]
    fn jaynes_cummings_elements() {
        let p = SystemParams::one_d(1.0, 0.0, 0.0, 0.0, 0.0, 0);
        let s = space_for(&p, 6);
        let h = build_effective_hamiltonian(&p, &s).unwrap();
        let e0 = s.index(Qubit::Excited, &[0]);
        let g1 = s.index(Qubit::Ground, &[1]);
        assert_eq!(h.get(e0, g1), C64::new(1.0, 0.0));
        for i in 0..s.total_dim() {
            for j in 0..s.total_dim() {
                let v = h.get(i, j);
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let (qi, ni) = s.state(i);
                let (qj, nj) = s.state(j);
                let (ge, eg) = if qi == Qubit::Ground {
                    (ni[0], nj[0])
                } else {
                    (nj[0], ni[0])
                };
                assert_ne!(qi, qj);
                assert_eq!(eg + 1, ge);
                assert!((v.re - (ge as f64).sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn decay_on_excited_diagonal() {
        let p = SystemParams::one_d(1.0, 3.0, 0.0, 4.0, 0.0, 2);
        let s = space_for(&p, 8);
        let h = build_effective_hamiltonian(&p, &s).unwrap();
        for i in s.excited_range() {
            assert_eq!(h.get(i, i), C64::new(0.0, -2.0));
        }
        for i in 0..s.block_size() {
            assert_eq!(h.get(i, i), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn two_mode_elements() {
        let p = SystemParams::two_d(2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2);
        let s = space_for(&p, 6);
        let h = build_effective_hamiltonian(&p, &s).unwrap();
        for n1 in 1..6 {
            for n2 in 0..6 {
                let v = h.get(
                    s.index(Qubit::Excited, &[n1 - 1, n2]),
                    s.index(Qubit::Ground, &[n1, n2]),
                );
                assert!((v.re - 2.0 * (n1 as f64).sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matches_operator_algebra() {
        let p = SystemParams::two_d(1.3, 0.7, 2.2, 0.4, 3.0, 0.0, 2);
        let s = space_for(&p, 5);
        let h = build_effective_hamiltonian(&p, &s).unwrap();
        let sp = sigma_plus(&s).matrix().clone();
        let sm = sp.t().to_owned();
        let sz = sigma_z(&s).matrix().clone();
        let pe = excited_projector(&s).matrix().clone();
        let mut expect: Array2<C64> = (&sp + &sm).mapv(|z| z * p.drive / 2.0)
            + sz.mapv(|z| z * p.detuning / 2.0)
            - pe.mapv(|z| z * C64::new(0.0, p.qubit_decay / 2.0));
        for (mode, g) in p.couplings.iter().enumerate() {
            let a = lowering(&s, mode).matrix().clone();
            let ad = a.t().to_owned();
            expect = expect + (sp.dot(&a) + sm.dot(&ad)).mapv(|z| z * *g);
        }
        let diff = (h.matrix() - &expect)
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn hermitian_without_decay() {
        let p = SystemParams::two_d(2.0, 1.0, 5.0, 0.3, 7.0, 0.0, 3);
        let s = space_for(&p, 6);
        let mut h = build_effective_hamiltonian(&p, &s).unwrap();
        assert!(h.hermiticity_defect() > 1.0);
        for i in s.excited_range() {
            h.add(i, i, C64::new(0.0, p.qubit_decay / 2.0));
        }
        assert!(h.hermiticity_defect() < 1e-12);
        let mut q = p.clone();
        q.qubit_decay = 0.0;
        assert!(
            build_effective_hamiltonian(&q, &s)
                .unwrap()
                .hermiticity_defect()
                < 1e-12
        );
    }
}
