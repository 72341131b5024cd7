//! Quantum-jump unraveling of the decay channel.
//!
//! Dephasing is not unraveled, so the normalized no-jump state is the same for
//! every trajectory. It is computed once; each trajectory then only draws its
//! first jump time against the shared per-step jump probabilities
//! ΔP = γ dt Tr ρ̂_ee and records the photon distribution of ρ̂_ee at that step.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evolve::{DecayRecord, EvolutionConfig, StopReason};
use super::linalg::expm;
use crate::error::{config, Error, Result};
use crate::model::{build_effective_hamiltonian, DensityMatrix, SystemParams, C64};

/// Largest jump probability tolerated in one step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub trajectories: usize,
    pub seed: u64,
    pub jump_dt: f64,
    /// Times the step may be halved after a too-coarse jump probability.
    pub max_halvings: u32,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            trajectories: 2000,
            seed: 0,
            jump_dt: 0.01,
            max_halvings: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    /// Fraction of trajectories that jumped into each photon configuration.
    pub record: DecayRecord,
    /// Standard error of each entry of `record.decayed`.
    pub stderr: Vec<f64>,
    /// ⟨N_α⟩ over jumped trajectories and its standard error.
    pub mean_photons: Vec<f64>,
    pub mean_photon_stderr: Vec<f64>,
    pub trajectories: usize,
    pub jumped: usize,
    pub jump_dt: f64,
}

struct NoJumpPath {
    jump_probability: Vec<f64>,
    outcomes: Vec<Vec<f64>>,
    stop: StopReason,
}

fn no_jump_path(
    params: &SystemParams,
    rho0: &DensityMatrix,
    cfg: &EvolutionConfig,
    dt: f64,
) -> Result<NoJumpPath> {
    let space = rho0.space();
    let block = space.block_size();
    let h = build_effective_hamiltonian(params, space)?;
    let u = expm(&h.matrix().mapv(|z| z * C64::new(0.0, -dt)));
    let gamma = params.qubit_decay;
    let d = params.qubit_dephase;

    enum State {
        Pure(Array1<C64>),
        Mixed(Array2<C64>),
    }
    let mut state = match (d == 0.0).then(|| rho0.as_pure_state(1e-12)).flatten() {
        Some(psi) => State::Pure(psi),
        None => State::Mixed(rho0.matrix().clone()),
    };
    let coherence_damping = (-2.0 * d * dt / 2.0).exp();
    let dephase = |rho: &mut Array2<C64>| {
        if d > 0.0 {
            for ((i, j), z) in rho.indexed_iter_mut() {
                if (i < block) != (j < block) {
                    *z *= coherence_damping;
                }
            }
        }
    };

    let window = (cfg.plateau_window / dt).round().max(1.0) as usize;
    let max_steps = (cfg.max_time / dt).ceil() as usize;
    let mut survival = vec![1.0];
    let mut jump_probability = Vec::new();
    let mut outcomes = Vec::new();
    let stop = loop {
        let k = jump_probability.len();
        let s = survival[k];
        if s < cfg.convergence_trace {
            break StopReason::Decayed;
        }
        if k >= window && survival[k - window] - s <= cfg.plateau_rate * cfg.plateau_window * s {
            break StopReason::Plateau;
        }
        if k >= max_steps {
            if s <= 100.0 * cfg.convergence_trace {
                break StopReason::MaxTime;
            }
            return Err(Error::NonConvergence {
                time: k as f64 * dt,
                surviving: s,
            });
        }
        let (excited, trace): (Vec<f64>, f64) = match &state {
            State::Pure(psi) => (
                psi.iter().skip(block).map(|z| z.norm_sqr()).collect(),
                psi.iter().map(|z| z.norm_sqr()).sum(),
            ),
            State::Mixed(rho) => (
                (block..2 * block).map(|i| rho[[i, i]].re).collect(),
                rho.diag().iter().map(|z| z.re).sum(),
            ),
        };
        let excited_total: f64 = excited.iter().sum();
        let dp = gamma * dt * excited_total / trace;
        if !dp.is_finite() {
            return Err(Error::NumericalInstability(
                "non-finite jump probability".into(),
            ));
        }
        if dp > MAX_JUMP_PROBABILITY {
            return Err(Error::JumpStepTooCoarse { probability: dp });
        }
        let outcome = if excited_total > 0.0 {
            excited.iter().map(|p| p / excited_total).collect()
        } else {
            vec![0.0; block]
        };
        jump_probability.push(dp);
        outcomes.push(outcome);
        survival.push(s * (1.0 - dp));
        match &mut state {
            State::Pure(psi) => {
                *psi = u.dot(&*psi);
                let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                psi.mapv_inplace(|z| z / norm);
            }
            State::Mixed(rho) => {
                dephase(rho);
                let mut next = u.dot(&*rho).dot(&u.t().mapv(|z| z.conj()));
                dephase(&mut next);
                let tr: f64 = next.diag().iter().map(|z| z.re).sum();
                next.mapv_inplace(|z| z / tr);
                *rho = next;
            }
        }
    };
    Ok(NoJumpPath {
        jump_probability,
        outcomes,
        stop,
    })
}

/// First jump step of trajectory `index`, if any.
fn first_jump(seed: u64, index: usize, jump_probability: &[f64]) -> Option<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    jump_probability
        .iter()
        .position(|&dp| rng.random::<f64>() < dp)
}

/// Monte Carlo estimate of the decay distribution.
pub fn jump_monte_carlo(
    params: &SystemParams,
    rho0: &DensityMatrix,
    traj: &TrajectoryConfig,
    cfg: &EvolutionConfig,
) -> Result<MonteCarloResult> {
    cfg.validate()?;
    params.validate()?;
    if traj.trajectories < 2 {
        return config("at least two trajectories are required");
    }
    if !(traj.jump_dt > 0.0 && traj.jump_dt.is_finite()) {
        return config("jump_dt must be positive");
    }
    if rho0.space().modes() != params.dimension() {
        return config("initial state and parameters disagree on the number of modes");
    }
    let mut dt = traj.jump_dt;
    let mut halvings = 0;
    let path = loop {
        match no_jump_path(params, rho0, cfg, dt) {
            Err(Error::JumpStepTooCoarse { .. }) if halvings < traj.max_halvings => {
                dt /= 2.0;
                halvings += 1;
            }
            other => break other?,
        }
    };

    let jumps: Vec<Option<usize>> = (0..traj.trajectories)
        .map(|i| first_jump(traj.seed, i, &path.jump_probability))
        .collect();

    let space = rho0.space();
    let block = space.block_size();
    let modes = space.modes();
    let mut counts = vec![0usize; path.outcomes.len()];
    for k in jumps.iter().flatten() {
        counts[*k] += 1;
    }
    let total = traj.trajectories as f64;
    let mut sum = vec![0.0; block];
    let mut sum_sq = vec![0.0; block];
    let mut m_sum = vec![0.0; modes];
    let mut m_sq = vec![0.0; modes];
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let c = c as f64;
        let outcome = &path.outcomes[k];
        for (i, p) in outcome.iter().enumerate() {
            sum[i] += c * p;
            sum_sq[i] += c * p * p;
        }
        for mode in 0..modes {
            let m: f64 = outcome
                .iter()
                .enumerate()
                .map(|(i, p)| space.photon(i, mode) as f64 * p)
                .sum();
            m_sum[mode] += c * m;
            m_sq[mode] += c * m * m;
        }
    }
    let jumped: usize = counts.iter().sum();
    let decayed: Vec<f64> = sum.iter().map(|s| s / total).collect();
    let stderr = decayed
        .iter()
        .zip(&sum_sq)
        .map(|(mean, sq)| {
            let var = (sq / total - mean * mean).max(0.0) * total / (total - 1.0);
            (var / total).sqrt()
        })
        .collect();
    let j = jumped as f64;
    // NaN when too few trajectories jumped to define the mean or its spread.
    let (mean_photons, mean_photon_stderr) = m_sum
        .iter()
        .zip(&m_sq)
        .map(|(s, sq)| {
            let mean = if jumped > 0 { s / j } else { f64::NAN };
            let err = if jumped > 1 {
                let var = (sq / j - mean * mean).max(0.0) * j / (j - 1.0);
                (var / j).sqrt()
            } else {
                f64::NAN
            };
            (mean, err)
        })
        .unzip();
    let elapsed = path.jump_probability.len() as f64 * dt;
    let record = DecayRecord {
        truncations: space.truncations().to_vec(),
        decayed,
        surviving_trace: (traj.trajectories - jumped) as f64 / total,
        elapsed_time: elapsed,
        steps: path.jump_probability.len(),
        dt,
        stop: path.stop,
        max_top_population: vec![0.0; modes],
        max_hermiticity_defect: 0.0,
        checkpoints: Vec::new(),
    };
    Ok(MonteCarloResult {
        record,
        stderr,
        mean_photons,
        mean_photon_stderr,
        trajectories: traj.trajectories,
        jumped,
        jump_dt: dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let dp = vec![0.01; 2000];
        let a: Vec<_> = (0..50).map(|i| first_jump(7, i, &dp)).collect();
        let b: Vec<_> = (0..50).map(|i| first_jump(7, i, &dp)).collect();
        assert_eq!(a, b);
        let distinct: std::collections::HashSet<_> = a.iter().collect();
        assert!(distinct.len() > 20);
    }

    #[test]
    fn no_decay_means_no_jumps() {
        let p = SystemParams::one_d(1.0, 2.0, 0.0, 0.0, 0.0, 3);
        let space = crate::model::HilbertSpace::for_params(&p, &[8]).unwrap();
        let rho0 =
            crate::model::build_initial_state(crate::model::InitialKind::Fock, 3, &space).unwrap();
        let traj = TrajectoryConfig {
            trajectories: 10,
            jump_dt: 0.05,
            ..Default::default()
        };
        let r = jump_monte_carlo(&p, &rho0, &traj, &EvolutionConfig::default()).unwrap();
        assert_eq!(r.jumped, 0);
        assert_eq!(r.record.surviving_trace, 1.0);
        assert!(r.record.decayed.iter().all(|&x| x == 0.0));
        assert!(r.mean_photons[0].is_nan());
    }
}
