//! Batch front door: config in, `report.csv` (and optionally `report.json`)
//! out.
//!
//! Exit codes: 0 success, 2 validation error, 3 physics error (instability,
//! singular response), 4 bound violation found by `verify`.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use serde_json::{json, Value};

use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{DriveSpec, SensorNetwork};
use crate::scenarios::{self, SweepOutcome};
use crate::stochastic;
use crate::suite::{self, TargetKind};

pub use config::{Command, Format, RunConfig};
pub use report::{Cell, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bosonic-limits", version, about = "Sensing limits of linear bosonic sensor networks")]
pub struct Args {
    /// Subcommand; may instead be given as `command` in the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override `section.key=value` (repeatable).
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: output.path or the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Successful run: the report and whether `verify` found a violation.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub violation: bool,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_physics() {
        EXIT_PHYSICS
    } else {
        EXIT_VALIDATION
    }
}

fn reason(e: &Error) -> String {
    config::one_line(&e.to_string())
}

/// Parse arguments, run, write reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, out_dir) = match resolve(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: kind=validation reason={}", reason(&e));
            return EXIT_VALIDATION;
        }
    };
    match execute(&cfg) {
        Ok(outcome) => {
            let json = cfg.output.format == Some(Format::Json);
            if let Err(e) = outcome.report.write(&out_dir, json) {
                eprintln!("error: kind=io reason={}", config::one_line(&e.to_string()));
                return EXIT_VALIDATION;
            }
            if outcome.violation {
                eprintln!("error: kind=violation reason=bound violated on at least one instance");
                EXIT_VIOLATION
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == EXIT_PHYSICS { "physics" } else { "validation" };
            eprintln!("error: kind={kind} reason={}", reason(&e));
            code
        }
    }
}

/// Merge the config file, overrides and flags into one resolved config.
pub fn resolve(args: &Args) -> Result<(RunConfig, PathBuf)> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = config::load(&text, &args.overrides)?;
    cfg.command = match (args.command, cfg.command) {
        (Some(a), Some(c)) if a != c => {
            return Err(Error::InvalidArgument(format!(
                "command `{}` conflicts with config command `{}`",
                a.as_str(),
                c.as_str()
            )))
        }
        (Some(a), _) => Some(a),
        (None, Some(c)) => Some(c),
        (None, None) => return Err(Error::InvalidArgument("no command given".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    cfg.seed = Some(cfg.seed.unwrap_or(0));
    if let Some(f) = args.format {
        cfg.output.format = Some(f);
    }
    cfg.output.format = Some(cfg.output.format.unwrap_or_default());
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    // the output location is not part of the experiment
    cfg.output.path = None;
    Ok((cfg, out))
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn setup_json(net: &SensorNetwork, drive: &DriveSpec) -> String {
    let r = report::round_sig;
    let n = net.len();
    let mut mu = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = net.mu()[(i, j)];
            if z.norm() != 0.0 {
                mu.push(json!([i, j, r(z.re), r(z.im)]));
            }
        }
    }
    let modes: Vec<Value> = net
        .modes()
        .iter()
        .map(|m| json!([r(m.w0), r(m.kappa_ex), r(m.kappa_0), r(m.g)]))
        .collect();
    let a_in: Vec<Value> = drive.a_in().iter().map(|z| json!([r(z.re), r(z.im)])).collect();
    json!({"modes": modes, "mu": mu, "w_in": r(drive.w_in), "a_in": a_in}).to_string()
}

/// Run the configured command. No files are touched.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let command = cfg
        .command
        .ok_or_else(|| Error::InvalidArgument("no command given".into()))?;
    let seed = cfg.seed.unwrap_or(0);
    let conf = config_json(cfg);
    let mut violation = false;
    let report = match command {
        Command::Analyze => {
            let (net, drive) = cfg.network_and_drive()?;
            let tau = cfg.tau()?;
            let target = cfg.target()?;
            let setup = setup_json(&net, &drive);
            let mut rep = Report::new(
                "analyze",
                conf,
                vec![
                    "port", "target", "tau", "response_mag", "noise_std", "snr_coeff", "limit",
                    "bound", "margin", "n_photons", "setup",
                ],
            );
            for port in cfg.ports() {
                let r = analytic::sensing_limit(&net, &drive, port, target, tau)?;
                let photons: Vec<f64> = r.n_photons.iter().map(|&x| report::round_sig(x)).collect();
                rep.push(vec![
                    port.into(),
                    target.to_string().into(),
                    tau.into(),
                    r.response_mag.into(),
                    r.noise_std.into(),
                    r.snr_coeff.into(),
                    r.limit.into(),
                    r.bound.into(),
                    r.margin.into(),
                    json!(photons).to_string().into(),
                    setup.clone().into(),
                ]);
            }
            rep
        }
        Command::Sweep => {
            let family = cfg.preset.as_ref().ok_or_else(|| {
                Error::InvalidArgument("sweep needs a [preset] family".into())
            })?;
            let parameter = cfg.sweep.parameter.as_deref().ok_or_else(|| {
                Error::InvalidArgument("sweep.parameter is required".into())
            })?;
            let grid = cfg.grid()?;
            let tau = cfg.tau()?;
            let target = cfg.target()?;
            let port = cfg.ports().first().copied().unwrap_or(0);
            let rows = scenarios::sweep(family, parameter, &grid, tau, port, target)?;
            let mut rep = Report::new(
                "sweep",
                conf,
                vec![
                    "preset", "parameter", "value", "port", "target", "tau", "status", "limit",
                    "bound", "margin", "response_mag", "reason",
                ],
            );
            for row in rows {
                let head: Vec<Cell> = vec![
                    family.name().into(),
                    parameter.into(),
                    row.value.into(),
                    port.into(),
                    target.to_string().into(),
                    tau.into(),
                ];
                let tail: Vec<Cell> = match row.outcome {
                    SweepOutcome::Ok {
                        limit,
                        bound,
                        margin,
                        response_mag,
                    } => vec![
                        "ok".into(),
                        limit.into(),
                        bound.into(),
                        margin.into(),
                        response_mag.into(),
                        Cell::Empty,
                    ],
                    SweepOutcome::Skipped { reason } => vec![
                        "skipped".into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        config::one_line(&reason).into(),
                    ],
                };
                rep.push(head.into_iter().chain(tail).collect());
            }
            rep
        }
        Command::Simulate => {
            let (net, drive) = cfg.network_and_drive()?;
            let tau = cfg.tau()?;
            let target = cfg.target()?;
            let phase = cfg.measurement.phase.unwrap_or(0.0);
            let sim = cfg.sim_config(&net, tau, seed)?;
            let ens = stochastic::simulate(&net, &drive, &sim, None)?;
            let setup = setup_json(&net, &drive);
            let mut rep = Report::new(
                "simulate",
                conf,
                vec![
                    "port", "phase", "tau", "n_traj", "dt", "burn_in", "n_samples", "mean",
                    "variance", "stderr_of_variance", "analytic_variance", "z_score", "target",
                    "delta", "empirical_snr", "analytic_snr", "setup",
                ],
            );
            for port in cfg.ports() {
                let est = stochastic::homodyne_estimate(&ens, port, phase, tau)?;
                let noise = analytic::output_noise_pair(&net, port, drive.w_in)?;
                let expected = noise.total() / tau;
                let snr = match cfg.measurement.perturbation {
                    Some(delta) => Some(stochastic::mc_snr(
                        &net, &drive, port, target, delta, &sim, tau,
                    )?),
                    None => None,
                };
                rep.push(vec![
                    port.into(),
                    phase.into(),
                    tau.into(),
                    sim.n_traj.into(),
                    sim.dt.into(),
                    sim.burn_in.into(),
                    est.n_samples.into(),
                    est.mean.into(),
                    est.variance.into(),
                    est.stderr_of_variance.into(),
                    expected.into(),
                    ((est.variance - expected) / est.stderr_of_variance).into(),
                    target.to_string().into(),
                    cfg.measurement.perturbation.into(),
                    snr.as_ref().map(|s| s.empirical).into(),
                    snr.as_ref().map(|s| s.analytic).into(),
                    setup.clone().into(),
                ]);
            }
            rep
        }
        Command::Phase => {
            let p = &cfg.phase;
            let r = stochastic::phase_diffusion(p.kappa, p.kappa_ex, p.n, p.tau, p.trials, seed)?;
            let linear = analytic::fundamental_bound(p.kappa, p.n, p.tau)?;
            let mut rep = Report::new(
                "phase",
                conf,
                vec![
                    "kappa", "kappa_ex", "n", "tau", "trials", "seed", "delta_w", "var_phase",
                    "expected_var_phase", "freq_std", "expected_freq_std", "linear_limit",
                    "ratio_to_linear",
                ],
            );
            rep.push(vec![
                p.kappa.into(),
                p.kappa_ex.into(),
                p.n.into(),
                p.tau.into(),
                p.trials.into(),
                Cell::Int(seed),
                r.delta_w.into(),
                r.var_phase.into(),
                (r.delta_w * p.tau).into(),
                r.freq_std.into(),
                stochastic::above_threshold_frequency_error(p.kappa, p.n, p.tau)?.into(),
                linear.into(),
                (r.freq_std / linear).into(),
            ]);
            rep
        }
        Command::Verify => {
            let v = &cfg.verify;
            if v.instances == 0 || v.max_modes == 0 {
                return Err(Error::InvalidArgument(
                    "verify.instances and verify.max_modes must be positive".into(),
                ));
            }
            let mut rep = Report::new(
                "verify",
                conf,
                vec![
                    "suite", "seed", "instances", "max_modes", "passed", "failed",
                    "rejected_draws", "min_rel_margin", "rel_tol",
                ],
            );
            for kind in [TargetKind::Frequency, TargetKind::Coupling] {
                let s = suite::run_bound_suite(seed, v.instances, v.max_modes, kind);
                violation |= s.failed > 0;
                rep.push(vec![
                    s.suite.into(),
                    Cell::Int(seed),
                    s.instances.into(),
                    v.max_modes.into(),
                    s.passed.into(),
                    s.failed.into(),
                    s.rejected_draws.into(),
                    s.min_rel_margin.into(),
                    suite::REL_TOL.into(),
                ]);
            }
            rep
        }
    };
    Ok(Outcome { report, violation })
}
