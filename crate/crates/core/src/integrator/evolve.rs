use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::propagate::{top_populations, DensityStepper, StateStepper, SCHEME_ORDER};
use crate::error::{config, Error, Result};
use crate::model::{
    build_effective_hamiltonian, DensityMatrix, HilbertSpace, OperatorMatrix, SystemParams, C64,
};

/// Numerical controls for a deterministic decay run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Requested step; capped at 1/‖H‖∞.
    pub initial_dt: f64,
    /// Stop once the surviving trace falls below this.
    pub convergence_trace: f64,
    pub richardson_levels: usize,
    pub richardson_tol: f64,
    /// Largest population allowed on the top rung of any mode.
    pub leakage_tol: f64,
    pub max_time: f64,
    /// Plateau rule: stop when the surviving trace lost less than
    /// `plateau_rate · plateau_window` of itself over the last window.
    pub plateau_window: f64,
    pub plateau_rate: f64,
    pub checkpoint_interval: f64,
    /// Propagate a state vector when the input is pure and d = 0.
    pub state_vector: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            initial_dt: 0.05,
            convergence_trace: 1e-6,
            richardson_levels: 8,
            richardson_tol: 1e-4,
            leakage_tol: 1e-6,
            max_time: 5000.0,
            plateau_window: 10.0,
            plateau_rate: 1e-3,
            checkpoint_interval: 1.0,
            state_vector: true,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("initial_dt", self.initial_dt),
            ("convergence_trace", self.convergence_trace),
            ("richardson_tol", self.richardson_tol),
            ("leakage_tol", self.leakage_tol),
            ("max_time", self.max_time),
            ("plateau_window", self.plateau_window),
            ("checkpoint_interval", self.checkpoint_interval),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return config(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.plateau_rate >= 0.0) {
            return config("plateau_rate must be non-negative");
        }
        if self.richardson_levels < 2 {
            return config("richardson_levels must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Surviving trace fell below the convergence threshold.
    Decayed,
    /// The remainder stopped decaying (dark component).
    Plateau,
    /// A fixed number of steps was requested.
    Horizon,
    /// `max_time` reached with a remainder below 100× the threshold.
    MaxTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub time: f64,
    pub surviving_trace: f64,
    pub decayed_total: f64,
}

/// Accumulated decay probabilities Pₙ = γ∫ρ^{ee}_{n,n} dt.
///
/// `decayed` is indexed by joint photon configuration in row-major order over
/// `truncations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub truncations: Vec<usize>,
    pub decayed: Vec<f64>,
    pub surviving_trace: f64,
    pub elapsed_time: f64,
    pub steps: usize,
    pub dt: f64,
    pub stop: StopReason,
    pub max_top_population: Vec<f64>,
    pub max_hermiticity_defect: f64,
    pub checkpoints: Vec<Checkpoint>,
}

impl DecayRecord {
    /// Record holding only a distribution, e.g. for tests or external data.
    pub fn from_distribution(truncations: Vec<usize>, decayed: Vec<f64>) -> Result<Self> {
        let size: usize = truncations.iter().product();
        if size != decayed.len() || truncations.is_empty() {
            return config("distribution length does not match the truncations");
        }
        let modes = truncations.len();
        Ok(Self {
            truncations,
            decayed,
            surviving_trace: 0.0,
            elapsed_time: 0.0,
            steps: 0,
            dt: 0.0,
            stop: StopReason::Horizon,
            max_top_population: vec![0.0; modes],
            max_hermiticity_defect: 0.0,
            checkpoints: Vec::new(),
        })
    }

    pub fn modes(&self) -> usize {
        self.truncations.len()
    }

    pub fn total_decayed(&self) -> f64 {
        self.decayed.iter().sum()
    }

    /// Photon number of `mode` for joint index `k`.
    pub fn photon(&self, k: usize, mode: usize) -> usize {
        let stride: usize = self.truncations[mode + 1..].iter().product();
        (k / stride) % self.truncations[mode]
    }

    /// P summed over the other modes.
    pub fn marginal(&self, mode: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.truncations[mode]];
        for (k, p) in self.decayed.iter().enumerate() {
            out[self.photon(k, mode)] += p;
        }
        out
    }

    /// Joint distribution normalized over the decayed weight.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let total = self.total_decayed();
        if !(total > 0.0) {
            return Err(Error::EmptyRecord);
        }
        Ok(self.decayed.iter().map(|p| p / total).collect())
    }

    pub fn average_photon(&self, mode: usize) -> Result<f64> {
        average_photon(self, mode)
    }

    pub fn mean_photons(&self) -> Result<Vec<f64>> {
        (0..self.modes()).map(|m| average_photon(self, m)).collect()
    }
}

/// ⟨N_α⟩ = Σ n Pₙ / Σ Pₙ.
pub fn average_photon(record: &DecayRecord, mode: usize) -> Result<f64> {
    if mode >= record.modes() {
        return config(format!("mode {mode} out of range"));
    }
    let total = record.total_decayed();
    if !(total > 0.0) {
        return Err(Error::EmptyRecord);
    }
    let weighted: f64 = record
        .decayed
        .iter()
        .enumerate()
        .map(|(k, p)| record.photon(k, mode) as f64 * p)
        .sum();
    Ok(weighted / total)
}

/// One ETDRK4 step of the no-jump master equation.
pub fn lindblad_step(
    rho: &DensityMatrix,
    hamiltonian: &OperatorMatrix,
    dephase: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if rho.space() != hamiltonian.space() {
        return config("state and Hamiltonian live on different spaces");
    }
    if !(dt > 0.0 && dt.is_finite()) || !(dephase >= 0.0) {
        return config("dt must be positive and dephasing non-negative");
    }
    let mut stepper = DensityStepper::new(hamiltonian, 0.0, dephase, dt);
    let mut m = rho.matrix().clone();
    let mut sink = vec![0.0; rho.space().block_size()];
    stepper.step(&mut m, &mut sink);
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalInstability(format!(
            "non-finite density matrix after a step of {dt}"
        )));
    }
    Ok(DensityMatrix::from_matrix(rho.space(), m))
}

enum Path {
    State {
        psi: Vec<C64>,
        stepper: StateStepper,
    },
    Density {
        rho: Array2<C64>,
        stepper: DensityStepper,
    },
}

impl Path {
    fn step(&mut self, decayed: &mut [f64]) {
        match self {
            Path::State { psi, stepper } => stepper.step(psi, decayed),
            Path::Density { rho, stepper } => stepper.step(rho, decayed),
        }
    }

    fn population(&self, i: usize) -> f64 {
        match self {
            Path::State { psi, .. } => psi[i].norm_sqr(),
            Path::Density { rho, .. } => rho[[i, i]].re,
        }
    }

    fn trace(&self) -> f64 {
        match self {
            Path::State { psi, .. } => psi.iter().map(|z| z.norm_sqr()).sum(),
            Path::Density { rho, .. } => rho.diag().iter().map(|z| z.re).sum(),
        }
    }

    fn hermiticity_defect(&self) -> f64 {
        match self {
            Path::State { .. } => 0.0,
            Path::Density { rho, .. } => {
                let n = rho.nrows();
                let mut worst = 0.0_f64;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((rho[[i, j]] - rho[[j, i]].conj()).norm());
                    }
                }
                worst
            }
        }
    }
}

enum Horizon {
    Adaptive,
    Steps(usize),
}

struct Run<'a> {
    params: &'a SystemParams,
    space: HilbertSpace,
    hamiltonian: OperatorMatrix,
    rho0: &'a DensityMatrix,
    cfg: &'a EvolutionConfig,
}

impl<'a> Run<'a> {
    fn new(
        params: &'a SystemParams,
        rho0: &'a DensityMatrix,
        cfg: &'a EvolutionConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let space = rho0.space().clone();
        if space.modes() != params.dimension() {
            return config("initial state and parameters disagree on the number of modes");
        }
        let hamiltonian = build_effective_hamiltonian(params, &space)?;
        Ok(Self {
            params,
            space,
            hamiltonian,
            rho0,
            cfg,
        })
    }

    fn pure_state(&self) -> Option<Vec<C64>> {
        if self.cfg.state_vector && self.params.qubit_dephase == 0.0 {
            self.rho0.as_pure_state(1e-12).map(|psi| psi.to_vec())
        } else {
            None
        }
    }

    fn base_dt(&self) -> f64 {
        let cap = if self.pure_state().is_some() {
            StateStepper::stable_dt(&self.hamiltonian)
        } else {
            DensityStepper::stable_dt(&self.hamiltonian)
        };
        self.cfg.initial_dt.min(cap)
    }

    fn path(&self, dt: f64) -> Path {
        let decay = self.params.qubit_decay;
        match self.pure_state() {
            Some(psi) => Path::State {
                psi,
                stepper: StateStepper::new(&self.hamiltonian, decay, dt),
            },
            None => Path::Density {
                rho: self.rho0.matrix().clone(),
                stepper: DensityStepper::new(
                    &self.hamiltonian,
                    decay,
                    self.params.qubit_dephase,
                    dt,
                ),
            },
        }
    }

    fn integrate(&self, dt: f64, horizon: Horizon) -> Result<DecayRecord> {
        let cfg = self.cfg;
        let mut path = self.path(dt);
        let block = self.space.block_size();
        let modes = self.space.modes();
        let mut decayed = vec![0.0; block];
        let mut history = vec![path.trace()];
        let window_steps = (cfg.plateau_window / dt).round().max(1.0) as usize;
        let checkpoint_steps = (cfg.checkpoint_interval / dt).round().max(1.0) as usize;
        let max_steps = (cfg.max_time / dt).ceil() as usize;
        let mut max_top = vec![0.0_f64; modes];
        let mut max_defect = 0.0_f64;
        let mut checkpoints = Vec::new();
        let mut k = 0usize;
        let stop = loop {
            let surviving = history[k];
            match horizon {
                Horizon::Steps(n) if k >= n => break StopReason::Horizon,
                Horizon::Adaptive => {
                    if surviving < cfg.convergence_trace {
                        break StopReason::Decayed;
                    }
                    if k >= window_steps {
                        let back = history[k - window_steps];
                        if back - surviving <= cfg.plateau_rate * cfg.plateau_window * surviving {
                            break StopReason::Plateau;
                        }
                    }
                    if k >= max_steps {
                        if surviving <= 100.0 * cfg.convergence_trace {
                            break StopReason::MaxTime;
                        }
                        return Err(Error::NonConvergence {
                            time: k as f64 * dt,
                            surviving,
                        });
                    }
                }
                _ => {}
            }
            path.step(&mut decayed);
            k += 1;
            let trace = path.trace();
            if !trace.is_finite() || trace > history[0] * (1.0 + 1e-9) {
                return Err(Error::NumericalInstability(format!(
                    "surviving trace {trace} at t = {}",
                    k as f64 * dt
                )));
            }
            history.push(trace);
            let top = top_populations(&self.space, |i| path.population(i));
            for (mode, (m, t)) in max_top.iter_mut().zip(top).enumerate() {
                *m = m.max(t);
                if t > cfg.leakage_tol {
                    return Err(Error::TruncationTooSmall {
                        mode,
                        population: t,
                        tolerance: cfg.leakage_tol,
                    });
                }
            }
            if k % checkpoint_steps == 0 {
                max_defect = max_defect.max(path.hermiticity_defect());
                checkpoints.push(Checkpoint {
                    time: k as f64 * dt,
                    surviving_trace: trace,
                    decayed_total: decayed.iter().sum(),
                });
            }
        };
        Ok(DecayRecord {
            truncations: self.space.truncations().to_vec(),
            decayed,
            surviving_trace: history[k],
            elapsed_time: k as f64 * dt,
            steps: k,
            dt,
            stop,
            max_top_population: max_top,
            max_hermiticity_defect: max_defect.max(path.hermiticity_defect()),
            checkpoints,
        })
    }
}

/// Integrate until the qubit has decayed (or only a dark remainder is left).
pub fn run_to_decay(
    params: &SystemParams,
    rho0: &DensityMatrix,
    cfg: &EvolutionConfig,
) -> Result<DecayRecord> {
    let run = Run::new(params, rho0, cfg)?;
    run.integrate(run.base_dt(), Horizon::Adaptive)
}

/// Integrate exactly `steps` steps of size `dt` (no stop rule, same guards).
pub fn run_fixed_steps(
    params: &SystemParams,
    rho0: &DensityMatrix,
    cfg: &EvolutionConfig,
    dt: f64,
    steps: usize,
) -> Result<DecayRecord> {
    let run = Run::new(params, rho0, cfg)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return config("dt must be positive");
    }
    run.integrate(dt, Horizon::Steps(steps))
}

/// Richardson tableau for samples at step sizes h, h/2, h/4, … of a quantity
/// with error expansion c₀hᵖ + c₁hᵖ⁺¹ + ….
pub fn richardson_table(samples: &[f64], order: u32) -> Vec<Vec<f64>> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    for (i, &s) in samples.iter().enumerate() {
        let mut row = vec![s];
        for j in 1..=i {
            let factor = 2f64.powi((order as usize + j - 1) as i32) - 1.0;
            let better = row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / factor;
            row.push(better);
        }
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RichardsonResult {
    /// Extrapolated ⟨N_α⟩ per mode.
    pub values: Vec<f64>,
    /// Last difference between successive diagonal extrapolants.
    pub error: f64,
    /// One tableau per mode.
    pub tables: Vec<Vec<Vec<f64>>>,
    pub end_time: f64,
    /// Finest-level record.
    pub record: DecayRecord,
}

/// ⟨N⟩ per mode extrapolated in dt at a fixed end time.
///
/// The coarsest level picks the end time with the usual stop rules; finer
/// levels halve dt and integrate to the same time.
pub fn richardson_run(
    params: &SystemParams,
    rho0: &DensityMatrix,
    cfg: &EvolutionConfig,
) -> Result<RichardsonResult> {
    let run = Run::new(params, rho0, cfg)?;
    let dt0 = run.base_dt();
    let first = run.integrate(dt0, Horizon::Adaptive)?;
    let steps0 = first.steps;
    let modes = params.dimension();
    let mut samples: Vec<Vec<f64>> = vec![first.mean_photons()?];
    let mut tables = Vec::new();
    for level in 1..cfg.richardson_levels {
        let scale = 1usize << level;
        let next = run.integrate(dt0 / scale as f64, Horizon::Steps(steps0 * scale))?;
        samples.push(next.mean_photons()?);
        let record = next;
        tables = (0..modes)
            .map(|m| {
                let s: Vec<f64> = samples.iter().map(|v| v[m]).collect();
                richardson_table(&s, SCHEME_ORDER)
            })
            .collect::<Vec<_>>();
        let mut error = 0.0_f64;
        let mut values = Vec::with_capacity(modes);
        for t in &tables {
            let best = t[level][level];
            let prev = t[level - 1][level - 1];
            error = error.max((best - prev).abs() / best.abs().max(1.0));
            values.push(best);
        }
        if error < cfg.richardson_tol {
            return Ok(RichardsonResult {
                values,
                error,
                tables,
                end_time: record.elapsed_time,
                record,
            });
        }
    }
    Err(Error::RichardsonNonConvergence {
        table: tables.into_iter().next().unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_of_point_mass() {
        let mut p = vec![0.0; 10];
        p[5] = 1.0;
        let r = DecayRecord::from_distribution(vec![10], p).unwrap();
        assert_eq!(r.average_photon(0).unwrap(), 5.0);
        let empty = DecayRecord::from_distribution(vec![4], vec![0.0; 4]).unwrap();
        assert_eq!(empty.average_photon(0), Err(Error::EmptyRecord));
    }

    #[test]
    fn joint_marginals() {
        let mut p = vec![0.0; 12];
        // truncations [3, 4]: index = n1 * 4 + n2
        p[2 * 4 + 1] = 0.5;
        p[1 * 4 + 3] = 0.5;
        let r = DecayRecord::from_distribution(vec![3, 4], p).unwrap();
        assert_eq!(r.marginal(0), vec![0.0, 0.5, 0.5]);
        assert_eq!(r.marginal(1), vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(r.mean_photons().unwrap(), vec![1.5, 2.0]);
    }

    #[test]
    fn richardson_removes_leading_term() {
        let a = 3.25;
        let f = |h: f64| a + 0.7 * h.powi(4);
        let t = richardson_table(&[f(0.1), f(0.05)], 4);
        assert!((t[1][1] - a).abs() < 1e-13);
        let g = |h: f64| a + 0.7 * h.powi(4) - 2.0 * h.powi(5);
        let t = richardson_table(&[g(0.2), g(0.1), g(0.05)], 4);
        assert!((t[2][2] - a).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        let bad = EvolutionConfig {
            initial_dt: -1.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }
}
