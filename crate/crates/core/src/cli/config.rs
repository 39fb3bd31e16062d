//! Run configuration: TOML sections, `--set` overrides and resolution into
//! engine inputs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CMatrix, DriveSpec, ModeParams, SensorNetwork, Target};
use crate::scenarios::{self, PresetSpec};
use crate::stochastic::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analyze,
    Sweep,
    Simulate,
    Phase,
    Verify,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
            Command::Phase => "phase",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One directed coupling entry μ_ij.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub modes: Vec<ModeParams>,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default)]
    pub w_in: f64,
    /// `[re, im]` per port.
    pub a_in: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub tau: Option<f64>,
    /// Ports to report; defaults to port 0.
    pub ports: Option<Vec<usize>>,
    /// `frequency:k` or `coupling:i-j`; defaults to `frequency:0`.
    pub target: Option<String>,
    /// Shift used by `simulate` for the Monte-Carlo SNR.
    pub perturbation: Option<f64>,
    /// Homodyne phase for `simulate`.
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,
    /// `log` or `linear`, used with start/stop/count.
    pub scale: Option<String>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_traj: Option<usize>,
    /// τ-windows recorded per trajectory.
    pub windows: Option<usize>,
    pub dt: Option<f64>,
    pub t_total: Option<f64>,
    pub burn_in: Option<f64>,
    pub block: Option<f64>,
    pub refine: Option<u32>,
    pub noiseless: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub kappa_ex: f64,
    #[serde(default = "default_n")]
    pub n: f64,
    #[serde(default = "default_phase_tau")]
    pub tau: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            kappa: default_kappa(),
            kappa_ex: 0.0,
            n: default_n(),
            tau: default_phase_tau(),
            trials: default_trials(),
        }
    }
}

fn default_kappa() -> f64 {
    1.0
}
fn default_n() -> f64 {
    100.0
}
fn default_phase_tau() -> f64 {
    200.0
}
fn default_trials() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_max_modes")]
    pub max_modes: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            instances: default_instances(),
            max_modes: default_max_modes(),
        }
    }
}

fn default_instances() -> usize {
    500
}
fn default_max_modes() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<Format>,
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub preset: Option<PresetSpec>,
    pub network: Option<NetworkSection>,
    pub drive: Option<DriveSection>,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parse a `--set` value as a TOML literal; bare words become strings.
fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply `section.key=value` (or top-level `key=value`) to a raw table.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("override `{spec}` lacks `=`")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) || keys.len() > 2 {
        return Err(Error::InvalidArgument(format!(
            "override key `{path}` must be `key` or `section.key`"
        )));
    }
    let value = parse_literal(raw.trim());
    let slot = if keys.len() == 2 {
        let section = table
            .entry(keys[0].to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match section {
            toml::Value::Table(t) => t,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "`{}` is not a section",
                    keys[0]
                )))
            }
        }
    } else {
        table
    };
    slot.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Parse config text and overrides into a [`RunConfig`].
pub fn load(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidArgument(one_line(&e.to_string())))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::InvalidArgument(one_line(&e.to_string())))
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl RunConfig {
    /// Network and drive from exactly one of `[preset]` or `[network]`;
    /// an explicit `[drive]` replaces the preset's normalized drive.
    pub fn network_and_drive(&self) -> Result<(SensorNetwork, DriveSpec)> {
        let (net, preset_drive) = match (&self.preset, &self.network) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "give either [preset] or [network], not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "a [preset] or [network] section is required".into(),
                ))
            }
            (Some(p), None) => {
                let built = p.build()?;
                (built.network, Some(built.drive))
            }
            (None, Some(n)) => (n.build()?, None),
        };
        let drive = match (&self.drive, preset_drive) {
            (Some(d), _) => d.build()?,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "an inline [network] needs a [drive] section".into(),
                ))
            }
        };
        drive.check_len(net.len())?;
        Ok((net, drive))
    }

    pub fn tau(&self) -> Result<f64> {
        let tau = self
            .measurement
            .tau
            .ok_or_else(|| Error::InvalidArgument("measurement.tau is required".into()))?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!("measurement.tau = {tau}")));
        }
        Ok(tau)
    }

    pub fn target(&self) -> Result<Target> {
        match &self.measurement.target {
            Some(s) => s.parse(),
            None => Ok(Target::Frequency(0)),
        }
    }

    pub fn ports(&self) -> Vec<usize> {
        self.measurement.ports.clone().unwrap_or_else(|| vec![0])
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        let grid = match (&s.values, s.start, s.stop, s.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match s.scale.as_deref().unwrap_or("linear") {
                "log" => {
                    if !(a > 0.0 && b > 0.0) {
                        return Err(Error::InvalidArgument(
                            "log sweep needs positive start and stop".into(),
                        ));
                    }
                    scenarios::logspace(a, b, n)
                }
                "linear" => scenarios::linspace(a, b, n),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "sweep.scale `{other}` is not log or linear"
                    )))
                }
            },
            _ => {
                return Err(Error::InvalidArgument(
                    "sweep needs either `values` or `start`, `stop` and `count`".into(),
                ))
            }
        };
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(grid)
    }

    /// Simulation config sized for `tau`, with explicit fields overriding.
    pub fn sim_config(&self, net: &SensorNetwork, tau: f64, seed: u64) -> Result<SimConfig> {
        let s = &self.simulation;
        let mut cfg = SimConfig::for_network(
            net,
            tau,
            s.windows.unwrap_or(4),
            s.n_traj.unwrap_or(200),
            seed,
        )?;
        if let Some(v) = s.dt {
            cfg.dt = v;
        }
        if let Some(v) = s.block {
            cfg.block = v;
        }
        if let Some(v) = s.burn_in {
            cfg.burn_in = v;
        }
        if let Some(v) = s.t_total {
            cfg.t_total = v;
        }
        if let Some(v) = s.refine {
            cfg.refine = v;
        }
        if let Some(v) = s.noiseless {
            cfg.noiseless = v;
        }
        cfg.validate(net)?;
        Ok(cfg)
    }
}

impl NetworkSection {
    pub fn build(&self) -> Result<SensorNetwork> {
        let n = self.modes.len();
        let mut mu = CMatrix::zeros(n, n);
        for c in &self.couplings {
            if c.i >= n || c.j >= n || c.i == c.j {
                return Err(Error::IndexOutOfRange(format!(
                    "coupling ({}, {}) in a {n}-mode network",
                    c.i, c.j
                )));
            }
            mu[(c.i, c.j)] = Complex64::new(c.re, c.im);
        }
        SensorNetwork::new(self.modes.clone(), mu)
    }
}

impl DriveSection {
    pub fn build(&self) -> Result<DriveSpec> {
        DriveSpec::new(
            self.w_in,
            self.a_in.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        )
    }
}
