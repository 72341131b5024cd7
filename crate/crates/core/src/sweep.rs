//! Parameter sweeps over the oracles, figure presets and CSV output.
//!
//! A sweep is a list of series (parameter overrides of a common base) times
//! an ordered list of control values. Each (series, value) cell runs every
//! selected oracle and yields one row per oracle. Cells run in parallel;
//! rows are always emitted in series-then-control order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{analytic_displacement, classical_displacement};
use crate::error::{config, Error, Result};
use crate::integrator::{
    jump_monte_carlo, richardson_run, run_to_decay, with_adaptive_truncation, EvolutionConfig,
    TrajectoryConfig, SCHEME_ORDER,
};
use crate::model::{DensityMatrix, InitialKind, SystemParams};

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    #[serde(alias = "omega")]
    Drive,
    #[serde(alias = "gamma")]
    QubitDecay,
    #[serde(alias = "delta")]
    Detuning,
    #[serde(alias = "d")]
    QubitDephase,
}

impl Control {
    pub fn name(self) -> &'static str {
        match self {
            Control::Drive => "drive",
            Control::QubitDecay => "qubit_decay",
            Control::Detuning => "detuning",
            Control::QubitDephase => "qubit_dephase",
        }
    }

    pub fn apply(self, params: &mut SystemParams, value: f64) {
        match self {
            Control::Drive => params.drive = value,
            Control::QubitDecay => params.qubit_decay = value,
            Control::Detuning => params.detuning = value,
            Control::QubitDephase => params.qubit_dephase = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Master-equation integration (Richardson-extrapolated unless disabled).
    Deterministic,
    MonteCarlo,
    /// Closed-form winding result.
    Analytic,
    /// Incoherent hopping, −v′/(v + v′).
    Classical,
}

impl Oracle {
    pub fn name(self) -> &'static str {
        match self {
            Oracle::Deterministic => "deterministic",
            Oracle::MonteCarlo => "monte_carlo",
            Oracle::Analytic => "analytic",
            Oracle::Classical => "classical",
        }
    }
}

/// Overrides applied to the base parameters for one curve of a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Series {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubit_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubit_dephase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_photon: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracles: Option<Vec<Oracle>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Vec<usize>>,
}

fn default_true() -> bool {
    true
}

/// A full sweep description, read from and written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: SystemParams,
    pub control: Control,
    pub control_values: Vec<f64>,
    pub initial_state: InitialKind,
    pub oracles: Vec<Oracle>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub trajectories: TrajectoryConfig,
    /// Extrapolate the deterministic oracle in dt; a single adaptive run otherwise.
    #[serde(default = "default_true")]
    pub richardson: bool,
    /// Per-mode Fock truncation; the mode-count default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Vec<usize>>,
    /// Curves sharing the base; a single unmodified curve when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

/// One fully resolved (series, control value) point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub series: usize,
    pub label: String,
    pub params: SystemParams,
    pub control_value: f64,
    pub initial_state: InitialKind,
    pub oracles: Vec<Oracle>,
    pub truncation: Option<Vec<usize>>,
}

fn check_values(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return config(format!("{what}: control_values must not be empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return config(format!("{what}: control_values must be finite"));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return config(format!("{what}: control_values must be strictly ordered"));
    }
    Ok(())
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep specs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.evolution.validate()?;
        check_values(&self.control_values, "sweep")?;
        if self.oracles.is_empty() {
            return config("at least one oracle must be selected");
        }
        if self.richardson && self.evolution.richardson_levels < 2 {
            return config("Richardson extrapolation needs richardson_levels >= 2");
        }
        for (i, s) in self.series.iter().enumerate() {
            if let Some(v) = &s.control_values {
                check_values(v, &format!("series {i}"))?;
            }
            if s.oracles.as_ref().is_some_and(|o| o.is_empty()) {
                return config(format!("series {i}: oracle list must not be empty"));
            }
        }
        for cell in self.cells() {
            cell.params.validate()?;
            if let Some(t) = &cell.truncation {
                if t.len() != cell.params.dimension() {
                    return config(format!(
                        "{}: {} truncations for a {}-mode system",
                        cell.label,
                        t.len(),
                        cell.params.dimension()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Every (series, control value) point in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let plain = [Series::default()];
        let series: &[Series] = if self.series.is_empty() {
            &plain
        } else {
            &self.series
        };
        let mut cells = Vec::new();
        for (i, s) in series.iter().enumerate() {
            let mut params = self.base.clone();
            if let Some(g) = &s.couplings {
                params.couplings = g.clone();
            }
            if let Some(x) = s.drive {
                params.drive = x;
            }
            if let Some(x) = s.detuning {
                params.detuning = x;
            }
            if let Some(x) = s.qubit_decay {
                params.qubit_decay = x;
            }
            if let Some(x) = s.qubit_dephase {
                params.qubit_dephase = x;
            }
            if let Some(n) = s.initial_photon {
                params.initial_photon = n;
            }
            let label = s.label.clone().unwrap_or_else(|| format!("series{i}"));
            let values = s.control_values.as_ref().unwrap_or(&self.control_values);
            for &value in values {
                let mut p = params.clone();
                self.control.apply(&mut p, value);
                cells.push(Cell {
                    series: i,
                    label: label.clone(),
                    params: p,
                    control_value: value,
                    initial_state: s.initial_state.unwrap_or(self.initial_state),
                    oracles: s.oracles.clone().unwrap_or_else(|| self.oracles.clone()),
                    truncation: s.truncation.clone().or_else(|| self.truncation.clone()),
                });
            }
        }
        cells
    }
}

/// Result of one oracle at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub series: usize,
    pub label: String,
    pub oracle: Oracle,
    pub initial_state: InitialKind,
    pub control_value: f64,
    /// Ω/2g in 1D, v/(v + v′ + v″) in 2D.
    pub x_axis: f64,
    /// Ω/(2g₁√N).
    pub x_over_sqrt_n: f64,
    pub initial_photon: u32,
    pub truncation: Vec<usize>,
    /// ⟨N_α⟩ per mode.
    pub mean_photons: Vec<f64>,
    /// ⟨N_α⟩ − N per mode.
    pub displacement: Vec<f64>,
    pub decayed_total: Option<f64>,
    pub surviving_trace: Option<f64>,
    /// Richardson difference (deterministic) or standard error (Monte Carlo).
    pub error_estimate: Option<f64>,
    pub stop: Option<String>,
    pub wall_time: f64,
    /// "ok", or the error that aborted this cell.
    pub status: String,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| !r.ok())
    }
}

/// Execution options that do not change the physics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Worker threads; all available cores when `None`.
    pub threads: Option<usize>,
    /// Zero the wall-time column so repeated runs are byte-identical.
    pub strict_bitrepro: bool,
}

struct Outcome {
    truncation: Vec<usize>,
    mean_photons: Vec<f64>,
    decayed_total: Option<f64>,
    surviving_trace: Option<f64>,
    error_estimate: Option<f64>,
    stop: Option<String>,
}

fn stop_name(stop: crate::integrator::StopReason) -> String {
    format!("{stop:?}").to_lowercase()
}

fn evaluate(spec: &SweepSpec, cell: &Cell, oracle: Oracle) -> Result<Outcome> {
    let p = &cell.params;
    let n = p.initial_photon as f64;
    match oracle {
        Oracle::Analytic => Ok(Outcome {
            truncation: Vec::new(),
            mean_photons: analytic_displacement(p)?.iter().map(|d| n + d).collect(),
            decayed_total: None,
            surviving_trace: None,
            error_estimate: None,
            stop: None,
        }),
        Oracle::Classical => {
            if p.dimension() != 1 {
                return config("the classical closed form is one-dimensional");
            }
            let d = classical_displacement(p.intra_hopping(), p.inter_hoppings()[0])?;
            Ok(Outcome {
                truncation: Vec::new(),
                mean_photons: vec![n + d],
                decayed_total: None,
                surviving_trace: None,
                error_estimate: None,
                stop: None,
            })
        }
        Oracle::Deterministic | Oracle::MonteCarlo => {
            with_adaptive_truncation(p, cell.initial_state, cell.truncation.as_deref(), |rho0| {
                simulate(spec, p, rho0, oracle)
            })
        }
    }
}

fn simulate(
    spec: &SweepSpec,
    p: &SystemParams,
    rho0: &DensityMatrix,
    oracle: Oracle,
) -> Result<Outcome> {
    let truncation = rho0.space().truncations().to_vec();
    if oracle == Oracle::MonteCarlo {
        let mc = jump_monte_carlo(p, rho0, &spec.trajectories, &spec.evolution)?;
        if mc.jumped < 2 {
            return Err(Error::EmptyRecord);
        }
        let err = mc.mean_photon_stderr.iter().copied().fold(0.0, f64::max);
        return Ok(Outcome {
            truncation,
            mean_photons: mc.mean_photons,
            decayed_total: Some(mc.record.total_decayed()),
            surviving_trace: Some(mc.record.surviving_trace),
            error_estimate: Some(err),
            stop: Some(stop_name(mc.record.stop)),
        });
    }
    if spec.richardson {
        let r = richardson_run(p, rho0, &spec.evolution)?;
        Ok(Outcome {
            truncation,
            mean_photons: r.values,
            decayed_total: Some(r.record.total_decayed()),
            surviving_trace: Some(r.record.surviving_trace),
            error_estimate: Some(r.error),
            stop: Some(stop_name(r.record.stop)),
        })
    } else {
        let r = run_to_decay(p, rho0, &spec.evolution)?;
        Ok(Outcome {
            truncation,
            mean_photons: r.mean_photons()?,
            decayed_total: Some(r.total_decayed()),
            surviving_trace: Some(r.surviving_trace),
            error_estimate: None,
            stop: Some(stop_name(r.stop)),
        })
    }
}

fn run_cell(spec: &SweepSpec, cell: &Cell, options: &RunOptions) -> Vec<SweepRow> {
    cell.oracles
        .iter()
        .map(|&oracle| {
            let start = Instant::now();
            let outcome = evaluate(spec, cell, oracle);
            let wall_time = if options.strict_bitrepro {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            };
            let n = cell.params.initial_photon as f64;
            let mut row = SweepRow {
                series: cell.series,
                label: cell.label.clone(),
                oracle,
                initial_state: cell.initial_state,
                control_value: cell.control_value,
                x_axis: cell.params.figure_abscissa(),
                x_over_sqrt_n: cell.params.scaled_abscissa(),
                initial_photon: cell.params.initial_photon,
                truncation: Vec::new(),
                mean_photons: Vec::new(),
                displacement: Vec::new(),
                decayed_total: None,
                surviving_trace: None,
                error_estimate: None,
                stop: None,
                wall_time,
                status: "ok".into(),
            };
            match outcome {
                Ok(o) => {
                    row.displacement = o.mean_photons.iter().map(|m| m - n).collect();
                    row.truncation = o.truncation;
                    row.mean_photons = o.mean_photons;
                    row.decayed_total = o.decayed_total;
                    row.surviving_trace = o.surviving_trace;
                    row.error_estimate = o.error_estimate;
                    row.stop = o.stop;
                }
                Err(e) => row.status = e.to_string(),
            }
            row
        })
        .collect()
}

/// Run every cell of `spec`. Cell failures are recorded per row; only an
/// invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec, options: &RunOptions) -> Result<SweepResult> {
    spec.validate()?;
    let cells = spec.cells();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = options.threads {
        if t == 0 {
            return config("threads must be at least 1");
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(spec, cell, options))
            .collect()
    });
    Ok(SweepResult {
        spec: spec.clone(),
        rows: rows.into_iter().flatten().collect(),
    })
}

/// Fixed CSV columns, in order.
pub const CSV_COLUMNS: [&str; 21] = [
    "series",
    "label",
    "oracle",
    "initial_state",
    "control",
    "control_value",
    "x_axis",
    "x_over_sqrt_n",
    "initial_photon",
    "truncation",
    "mean_n_1",
    "delta_n_1",
    "mean_n_2",
    "delta_n_2",
    "decayed_total",
    "surviving_trace",
    "error_estimate",
    "stop",
    "wall_time_s",
    "status",
    "scheme_order",
];

/// Shortest representation that round-trips (never more than 17 significant digits).
fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) || x.is_infinite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Write `result` as CSV preceded by `#` metadata lines.
pub fn write_csv(result: &SweepResult, out: &mut impl Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("writing CSV: {e}"));
    let spec = serde_json::to_string(&result.spec).expect("sweep specs always serialize");
    writeln!(out, "# qwalk {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    writeln!(out, "# scheme_order: {SCHEME_ORDER}").map_err(io)?;
    writeln!(out, "# control: {}", result.spec.control.name()).map_err(io)?;
    writeln!(out, "# spec: {spec}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &result.rows {
        let mode = |v: &Vec<f64>, k: usize| v.get(k).copied().map(fmt).unwrap_or_default();
        let truncation = r
            .truncation
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join("x");
        w.write_record([
            r.series.to_string(),
            r.label.clone(),
            r.oracle.name().into(),
            r.initial_state.name().into(),
            result.spec.control.name().into(),
            fmt(r.control_value),
            fmt(r.x_axis),
            fmt(r.x_over_sqrt_n),
            r.initial_photon.to_string(),
            truncation,
            mode(&r.mean_photons, 0),
            mode(&r.displacement, 0),
            mode(&r.mean_photons, 1),
            mode(&r.displacement, 1),
            opt(r.decayed_total),
            opt(r.surviving_trace),
            opt(r.error_estimate),
            r.stop.clone().unwrap_or_default(),
            fmt(r.wall_time),
            r.status.clone(),
            SCHEME_ORDER.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig7", "fig8", "fig9"];

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

/// Ω values giving Ω/2g on an even grid for g = 1.
fn drive_for_ratio(ratios: &[f64]) -> Vec<f64> {
    ratios.iter().map(|r| 2.0 * r).collect()
}

/// Ω values giving v/(v + v′ + v″) = x for inter-cell hoppings summing to `inter`.
fn drive_for_fraction(fractions: &[f64], inter: f64) -> Vec<f64> {
    fractions
        .iter()
        .map(|x| 2.0 * inter * x / (1.0 - x))
        .collect()
}

fn series(label: &str) -> Series {
    Series {
        label: Some(label.into()),
        ..Default::default()
    }
}

/// Sweep reproducing one of the published parameter studies.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let small_n = drive_for_ratio(&grid(0.25, 0.25, 24));
    let large_n = drive_for_ratio(&grid(1.0, 1.0, 20));
    let one_d = |n: u32| SystemParams::one_d(1.0, 0.0, 1e-4, 4.0, 0.0, n);
    let two_d = SystemParams::two_d(2.0, 1.0, 0.0, 1e-4, 25.0, 0.0, 5);
    let fractions = drive_for_fraction(&grid(0.05, 0.05, 19), 3.0 * 5f64.sqrt());
    let spec = |base, control, values: Vec<f64>, oracles: Vec<Oracle>, series| SweepSpec {
        base,
        control,
        control_values: values,
        initial_state: InitialKind::Fock,
        oracles,
        evolution: EvolutionConfig::default(),
        trajectories: TrajectoryConfig::default(),
        richardson: true,
        truncation: None,
        series,
        output_path: Some(format!("{name}.csv")),
    };
    use Oracle::*;
    let s = match name {
        "fig2" => spec(
            one_d(100),
            Control::Drive,
            large_n,
            vec![Deterministic],
            vec![
                Series {
                    oracles: Some(vec![Deterministic, Classical, Analytic]),
                    ..series("fock")
                },
                Series {
                    initial_state: Some(InitialKind::Coherent),
                    ..series("coherent")
                },
            ],
        ),
        "fig3" => spec(
            one_d(5),
            Control::Drive,
            small_n,
            vec![Deterministic, Analytic],
            [1, 2, 3, 5]
                .iter()
                .map(|&n| Series {
                    initial_photon: Some(n),
                    ..series(&format!("N={n}"))
                })
                .collect(),
        ),
        "fig4" => {
            let mut all = Vec::new();
            for (n, values) in [(5, &small_n), (100, &large_n)] {
                for gamma in [0.5, 1.0, 4.0, 20.0] {
                    all.push(Series {
                        initial_photon: Some(n),
                        qubit_decay: Some(gamma),
                        control_values: Some(values.clone()),
                        ..series(&format!("N={n},gamma={gamma}"))
                    });
                }
            }
            spec(
                one_d(5),
                Control::Drive,
                small_n.clone(),
                vec![Deterministic],
                all,
            )
        }
        "fig5" => {
            let mut all = Vec::new();
            for gamma in [4.0, 20.0] {
                for detuning in [1e-4, 1.0, 10.0] {
                    all.push(Series {
                        qubit_decay: Some(gamma),
                        detuning: Some(detuning),
                        ..series(&format!("gamma={gamma},detuning={detuning}"))
                    });
                }
            }
            spec(one_d(5), Control::Drive, small_n, vec![Deterministic], all)
        }
        "fig7" => spec(
            one_d(5),
            Control::QubitDephase,
            vec![0.0, 1.0, 10.0, 100.0],
            vec![Deterministic],
            small_n
                .iter()
                .map(|&omega| Series {
                    drive: Some(omega),
                    ..series(&format!("ratio={}", omega / 2.0))
                })
                .collect(),
        ),
        "fig8" => spec(
            two_d,
            Control::Drive,
            fractions,
            vec![Deterministic, Analytic],
            [5.0, 25.0, 100.0]
                .iter()
                .map(|&gamma| Series {
                    qubit_decay: Some(gamma),
                    ..series(&format!("gamma={gamma}"))
                })
                .collect(),
        ),
        "fig9" => {
            let mut s = spec(
                two_d,
                Control::Drive,
                fractions,
                vec![Deterministic, Analytic],
                [0.0, 10.0, 100.0]
                    .iter()
                    .map(|&d| Series {
                        qubit_dephase: Some(d),
                        ..series(&format!("d={d}"))
                    })
                    .collect(),
            );
            // dephased two-mode runs take the density path; one adaptive level
            s.richardson = false;
            s
        }
        other => {
            return config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            ))
        }
    };
    s.validate()?;
    Ok(s)
}

/// A single simulation point for the `evolve` and `mc` entry points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub params: SystemParams,
    #[serde(default = "default_fock")]
    pub initial_state: InitialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Vec<usize>>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub trajectories: TrajectoryConfig,
}

fn default_fock() -> InitialKind {
    InitialKind::Fock
}

impl PointSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("point spec: {e}")))?;
        spec.params.validate()?;
        spec.evolution.validate()?;
        Ok(spec)
    }
}
