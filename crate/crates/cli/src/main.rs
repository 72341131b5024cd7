//! `qwalk`: sweeps, figure presets and single-point runs from the command line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qwalk_core::analytic::{
    analytic_displacement, classical_displacement, pt_spectrum, winding_displacement,
};
use qwalk_core::integrator::{
    jump_monte_carlo, richardson_run, run_to_decay, with_adaptive_truncation, DecayRecord,
};
use qwalk_core::model::SystemParams;
use qwalk_core::sweep::{preset, run_sweep, write_csv, PointSpec, RunOptions, SweepSpec, PRESETS};
use qwalk_core::Error;

#[derive(Parser)]
#[command(
    name = "qwalk",
    version,
    about = "Decay-conditioned photon-number walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output file (CSV for sweeps, JSON otherwise); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fock truncation per mode, e.g. 30 or 24,24.
    #[arg(long, global = true, value_delimiter = ',')]
    truncation: Option<Vec<usize>>,
    /// Zero wall times so repeated runs produce identical bytes.
    #[arg(long, global = true)]
    strict_bitrepro: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a JSON file.
    Sweep { config: PathBuf },
    /// Emit or run one of the built-in figure sweeps.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: String,
        #[arg(long, conflicts_with = "run", required_unless_present = "run")]
        emit_config: bool,
        #[arg(long)]
        run: bool,
    },
    /// Closed-form and winding displacements at one parameter point.
    Analytic {
        /// Couplings g (one per mode), e.g. 1 or 2,1.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        g: Vec<f64>,
        /// Drive Ω.
        #[arg(long)]
        omega: f64,
        /// Initial photon number N.
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        detuning: f64,
        /// Inner contour resolution of the winding integral.
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
    },
    /// Integrate one parameter point (Richardson-extrapolated unless --single).
    Evolve {
        config: PathBuf,
        #[arg(long)]
        single: bool,
    },
    /// Quantum-jump Monte Carlo at one parameter point.
    Mc {
        config: PathBuf,
        #[arg(long)]
        trajectories: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => fs::File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit_json(value: &Value, path: Option<&Path>) -> Result<(), Failure> {
    let mut out = output(path)?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    )
    .and_then(|_| out.flush())
    .map_err(|e| Failure::Config(format!("writing output: {e}")))
}

fn sweep(mut spec: SweepSpec, common: &Common) -> Result<bool, Failure> {
    if let Some(seed) = common.seed {
        spec.trajectories.seed = seed;
    }
    if let Some(t) = &common.truncation {
        spec.truncation = Some(t.clone());
        for s in &mut spec.series {
            s.truncation = None;
        }
    }
    let options = RunOptions {
        threads: common.threads,
        strict_bitrepro: common.strict_bitrepro,
    };
    let result = run_sweep(&spec, &options)?;
    let path = common
        .out
        .clone()
        .or(spec.output_path.clone().map(PathBuf::from));
    let mut out = output(path.as_deref())?;
    write_csv(&result, &mut out)?;
    for r in result.rows.iter().filter(|r| !r.ok()) {
        eprintln!(
            "{} {} at {}: {}",
            r.label,
            r.oracle.name(),
            r.control_value,
            r.status
        );
    }
    Ok(!result.any_failed())
}

fn point(config: &Path, common: &Common) -> Result<PointSpec, Failure> {
    let mut spec = PointSpec::from_json(&read(config)?)?;
    if let Some(t) = &common.truncation {
        spec.truncation = Some(t.clone());
    }
    if let Some(seed) = common.seed {
        spec.trajectories.seed = seed;
    }
    Ok(spec)
}

fn record_json(record: &DecayRecord) -> Value {
    json!({
        "truncations": record.truncations,
        "marginals": (0..record.modes()).map(|m| record.marginal(m)).collect::<Vec<_>>(),
        "decayed_total": record.total_decayed(),
        "surviving_trace": record.surviving_trace,
        "elapsed_time": record.elapsed_time,
        "steps": record.steps,
        "dt": record.dt,
        "stop": format!("{:?}", record.stop).to_lowercase(),
        "max_top_population": record.max_top_population,
    })
}

fn displacement(params: &SystemParams, means: &[f64]) -> Vec<f64> {
    means
        .iter()
        .map(|m| m - params.initial_photon as f64)
        .collect()
}

fn evolve(spec: PointSpec, single: bool) -> Result<Value, Failure> {
    let p = &spec.params;
    let cfg = &spec.evolution;
    let value =
        with_adaptive_truncation(p, spec.initial_state, spec.truncation.as_deref(), |rho0| {
            if single {
                let record = run_to_decay(p, rho0, cfg)?;
                let means = record.mean_photons()?;
                Ok(json!({
                    "mean_photons": means,
                    "displacement": displacement(p, &means),
                    "record": record_json(&record),
                }))
            } else {
                let r = richardson_run(p, rho0, cfg)?;
                Ok(json!({
                    "mean_photons": r.values,
                    "displacement": displacement(p, &r.values),
                    "richardson_error": r.error,
                    "richardson_tables": r.tables,
                    "record": record_json(&r.record),
                }))
            }
        })?;
    Ok(value)
}

fn monte_carlo(mut spec: PointSpec, trajectories: Option<usize>) -> Result<Value, Failure> {
    if let Some(k) = trajectories {
        spec.trajectories.trajectories = k;
    }
    let p = &spec.params;
    let r = with_adaptive_truncation(p, spec.initial_state, spec.truncation.as_deref(), |rho0| {
        jump_monte_carlo(p, rho0, &spec.trajectories, &spec.evolution)
    })?;
    Ok(json!({
        "mean_photons": r.mean_photons,
        "mean_photon_stderr": r.mean_photon_stderr,
        "displacement": displacement(p, &r.mean_photons),
        "trajectories": r.trajectories,
        "jumped": r.jumped,
        "jump_dt": r.jump_dt,
        "seed": spec.trajectories.seed,
        "record": record_json(&r.record),
    }))
}

fn or_message<T: serde::Serialize>(r: qwalk_core::Result<T>) -> Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn analytic(params: SystemParams, resolution: usize) -> Result<Value, Failure> {
    params.validate()?;
    let v = params.intra_hopping();
    let inter = params.inter_hoppings();
    let winding: qwalk_core::Result<Vec<f64>> = (0..inter.len())
        .map(|a| winding_displacement(v, &inter, a, resolution))
        .collect();
    let classical = if inter.len() == 1 {
        or_message(classical_displacement(v, inter[0]))
    } else {
        Value::Null
    };
    let pt = pt_spectrum(&params, 256)?;
    Ok(json!({
        "x_axis": params.figure_abscissa(),
        "intra_hopping": v,
        "inter_hoppings": inter,
        "closed_form": or_message(analytic_displacement(&params)),
        "winding": or_message(winding),
        "classical": classical,
        "pt": {
            "all_unbroken": pt.all_unbroken,
            "min_coupling": pt.min_coupling,
            "intra_dominates": pt.intra_dominates,
        },
    }))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let common = &cli.common;
    let out = common.out.as_deref();
    match cli.command {
        Command::Sweep { config } => sweep(SweepSpec::from_json(&read(&config)?)?, common),
        Command::Preset {
            name,
            emit_config,
            run,
        } => {
            let spec = preset(&name)?;
            if emit_config && !run {
                let mut w = output(out)?;
                writeln!(w, "{}", spec.to_json())
                    .and_then(|_| w.flush())
                    .map_err(|e| Failure::Config(format!("writing output: {e}")))?;
                Ok(true)
            } else {
                sweep(spec, common)
            }
        }
        Command::Analytic {
            g,
            omega,
            n,
            gamma,
            detuning,
            resolution,
        } => {
            let params = SystemParams {
                couplings: g,
                drive: omega,
                detuning,
                qubit_decay: gamma,
                qubit_dephase: 0.0,
                initial_photon: n,
            };
            emit_json(&analytic(params, resolution)?, out)?;
            Ok(true)
        }
        Command::Evolve { config, single } => {
            emit_json(&evolve(point(&config, common)?, single)?, out)?;
            Ok(true)
        }
        Command::Mc {
            config,
            trajectories,
        } => {
            emit_json(&monte_carlo(point(&config, common)?, trajectories)?, out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
