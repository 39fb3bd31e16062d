//! Canonical sensor configurations and parameter sweeps over them.
//!
//! Every preset is driven at port 0 and normalized so that mode 0 holds
//! `n_target` photons, since every bound is expressed in photon number.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, SensingReport};
use crate::error::{Error, Result};
use crate::model::{CMatrix, DriveSpec, ModeParams, SensorNetwork, Target};

/// A fully parameterized network + drive.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub network: SensorNetwork,
    pub drive: DriveSpec,
    pub notes: String,
}

fn one() -> f64 {
    1.0
}
fn hundred() -> f64 {
    100.0
}
fn half() -> f64 {
    0.5
}
fn ep_epsilon() -> f64 {
    0.01
}
fn chain_len() -> usize {
    4
}

/// Addressable preset families and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetSpec {
    /// One passive cavity driven on resonance.
    SinglePassive {
        #[serde(default = "one")]
        kappa_0: f64,
        #[serde(default = "one")]
        kappa_ex: f64,
        #[serde(default = "hundred")]
        n_target: f64,
    },
    /// One cavity with linear gain below threshold.
    SingleActive {
        #[serde(default = "one")]
        kappa_0: f64,
        #[serde(default = "one")]
        kappa_ex: f64,
        #[serde(default = "half")]
        g: f64,
        #[serde(default = "hundred")]
        n_target: f64,
    },
    /// Two equal-frequency modes with net losses 2(γ0 ± γ) and real coupling
    /// γ + ε, i.e. a distance ε from the exceptional point.
    TwoModeEp {
        #[serde(default = "ep_epsilon")]
        epsilon: f64,
        #[serde(default = "half")]
        gamma: f64,
        #[serde(default = "one")]
        loss_offset: f64,
        #[serde(default = "one")]
        kappa_0: f64,
        #[serde(default = "half")]
        kappa_ex2: f64,
        #[serde(default = "hundred")]
        n_target: f64,
    },
    /// Two passive modes with one-way coupling.
    TwoModeNonreciprocal {
        #[serde(default = "one")]
        mu12: f64,
        #[serde(default)]
        mu21: f64,
        #[serde(default = "hundred")]
        n_target: f64,
    },
    /// Nearest-neighbour chain of passive modes.
    Chain {
        #[serde(default = "chain_len")]
        n: usize,
        #[serde(default = "half")]
        coupling: f64,
        #[serde(default = "hundred")]
        n_target: f64,
    },
}

pub const PRESET_NAMES: [&str; 5] = [
    "single_passive",
    "single_active",
    "two_mode_ep",
    "two_mode_nonreciprocal",
    "chain",
];

/// Preset with default parameters.
pub fn preset(name: &str) -> Result<Preset> {
    PresetSpec::default_for(name)?.build()
}

impl PresetSpec {
    pub fn default_for(name: &str) -> Result<Self> {
        let spec = match name {
            "single_passive" => PresetSpec::SinglePassive {
                kappa_0: 1.0,
                kappa_ex: 1.0,
                n_target: 100.0,
            },
            "single_active" => PresetSpec::SingleActive {
                kappa_0: 1.0,
                kappa_ex: 1.0,
                g: 0.5,
                n_target: 100.0,
            },
            "two_mode_ep" => PresetSpec::TwoModeEp {
                epsilon: ep_epsilon(),
                gamma: 0.5,
                loss_offset: 1.0,
                kappa_0: 1.0,
                kappa_ex2: 0.5,
                n_target: 100.0,
            },
            "two_mode_nonreciprocal" => PresetSpec::TwoModeNonreciprocal {
                mu12: 1.0,
                mu21: 0.0,
                n_target: 100.0,
            },
            "chain" => PresetSpec::Chain {
                n: 4,
                coupling: 0.5,
                n_target: 100.0,
            },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetSpec::SinglePassive { .. } => "single_passive",
            PresetSpec::SingleActive { .. } => "single_active",
            PresetSpec::TwoModeEp { .. } => "two_mode_ep",
            PresetSpec::TwoModeNonreciprocal { .. } => "two_mode_nonreciprocal",
            PresetSpec::Chain { .. } => "chain",
        }
    }

    pub fn n_target(&self) -> f64 {
        match *self {
            PresetSpec::SinglePassive { n_target, .. }
            | PresetSpec::SingleActive { n_target, .. }
            | PresetSpec::TwoModeEp { n_target, .. }
            | PresetSpec::TwoModeNonreciprocal { n_target, .. }
            | PresetSpec::Chain { n_target, .. } => n_target,
        }
    }

    /// Copy with one named parameter replaced.
    pub fn with_parameter(&self, parameter: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let unknown = || {
            Error::InvalidArgument(format!(
                "preset {} has no parameter `{parameter}`",
                self.name()
            ))
        };
        let slot: &mut f64 = match (&mut out, parameter) {
            (PresetSpec::SinglePassive { kappa_0, .. }, "kappa_0") => kappa_0,
            (PresetSpec::SinglePassive { kappa_ex, .. }, "kappa_ex") => kappa_ex,
            (PresetSpec::SingleActive { kappa_0, .. }, "kappa_0") => kappa_0,
            (PresetSpec::SingleActive { kappa_ex, .. }, "kappa_ex") => kappa_ex,
            (PresetSpec::SingleActive { g, .. }, "g") => g,
            (PresetSpec::TwoModeEp { epsilon, .. }, "epsilon") => epsilon,
            (PresetSpec::TwoModeEp { gamma, .. }, "gamma") => gamma,
            (PresetSpec::TwoModeEp { loss_offset, .. }, "loss_offset") => loss_offset,
            (PresetSpec::TwoModeEp { kappa_0, .. }, "kappa_0") => kappa_0,
            (PresetSpec::TwoModeEp { kappa_ex2, .. }, "kappa_ex2") => kappa_ex2,
            (PresetSpec::TwoModeNonreciprocal { mu12, .. }, "mu12") => mu12,
            (PresetSpec::TwoModeNonreciprocal { mu21, .. }, "mu21") => mu21,
            (PresetSpec::Chain { coupling, .. }, "coupling") => coupling,
            (PresetSpec::Chain { n, .. }, "n") => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidArgument(format!("chain length {value}")));
                }
                *n = value as usize;
                return Ok(out);
            }
            (
                PresetSpec::SinglePassive { n_target, .. }
                | PresetSpec::SingleActive { n_target, .. }
                | PresetSpec::TwoModeEp { n_target, .. }
                | PresetSpec::TwoModeNonreciprocal { n_target, .. }
                | PresetSpec::Chain { n_target, .. },
                "n_target",
            ) => n_target,
            _ => return Err(unknown()),
        };
        *slot = value;
        Ok(out)
    }

    pub fn build(&self) -> Result<Preset> {
        let (network, notes) = match *self {
            PresetSpec::SinglePassive {
                kappa_0, kappa_ex, ..
            } => (
                SensorNetwork::uncoupled(vec![ModeParams::passive(0.0, kappa_ex, kappa_0)])?,
                "single passive cavity driven on resonance".to_string(),
            ),
            PresetSpec::SingleActive {
                kappa_0,
                kappa_ex,
                g,
                ..
            } => (
                SensorNetwork::uncoupled(vec![ModeParams::new(0.0, kappa_ex, kappa_0, g)])?,
                format!("single cavity with gain g = {g} below threshold"),
            ),
            PresetSpec::TwoModeEp {
                epsilon,
                gamma,
                loss_offset,
                kappa_0,
                kappa_ex2,
                ..
            } => {
                if !(epsilon > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "EP offset epsilon must be positive, got {epsilon}"
                    )));
                }
                if !(gamma > 0.0 && loss_offset > 0.0) {
                    return Err(Error::InvalidArgument(
                        "gamma and loss_offset must be positive".into(),
                    ));
                }
                let kappa_ex1 = 2.0 * (loss_offset + gamma) - kappa_0;
                let g2 = kappa_0 + kappa_ex2 - 2.0 * (loss_offset - gamma);
                if kappa_ex1 < 0.0 || g2 < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "EP losses not realizable: kappa_ex1 = {kappa_ex1}, g2 = {g2}"
                    )));
                }
                let mu = gamma + epsilon;
                let modes = vec![
                    ModeParams::new(0.0, kappa_ex1, kappa_0, 0.0),
                    ModeParams::new(0.0, kappa_ex2, kappa_0, g2),
                ];
                let coupling = CMatrix::from_row_slice(
                    2,
                    2,
                    &[c(0.0), c(mu), c(mu), c(0.0)],
                );
                (
                    SensorNetwork::new(modes, coupling)?,
                    format!("two-mode exceptional point, mu = gamma + {epsilon}"),
                )
            }
            PresetSpec::TwoModeNonreciprocal { mu12, mu21, .. } => {
                let modes = vec![ModeParams::passive(0.0, 1.0, 1.0); 2];
                let coupling =
                    CMatrix::from_row_slice(2, 2, &[c(0.0), c(mu12), c(mu21), c(0.0)]);
                (
                    SensorNetwork::new(modes, coupling)?,
                    format!("non-reciprocal pair, mu12 = {mu12}, mu21 = {mu21}"),
                )
            }
            PresetSpec::Chain { n, coupling, .. } => {
                if n == 0 {
                    return Err(Error::EmptyNetwork);
                }
                let modes = (0..n)
                    .map(|i| ModeParams::passive(0.0, if i == 0 { 1.0 } else { 0.5 }, 1.0))
                    .collect();
                let mu = CMatrix::from_fn(n, n, |i, j| {
                    if i.abs_diff(j) == 1 {
                        c(coupling)
                    } else {
                        c(0.0)
                    }
                });
                (
                    SensorNetwork::new(modes, mu)?,
                    format!("{n}-mode nearest-neighbour chain, coupling {coupling}"),
                )
            }
        };
        network.require_below_threshold()?;
        let unit = DriveSpec::single_port(0.0, network.len(), 0, c(1.0))?;
        let drive = analytic::normalize_drive(&network, &unit, 0, self.n_target())?;
        Ok(Preset {
            name: self.name().to_string(),
            network,
            drive,
            notes,
        })
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Outcome of one sweep grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(flatten)]
    pub outcome: SweepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepOutcome {
    Ok {
        limit: f64,
        bound: f64,
        margin: f64,
        response_mag: f64,
    },
    Skipped {
        reason: String,
    },
}

impl SweepRow {
    pub fn report(&self) -> Option<(f64, f64, f64)> {
        match self.outcome {
            SweepOutcome::Ok {
                limit,
                bound,
                margin,
                ..
            } => Some((limit, bound, margin)),
            SweepOutcome::Skipped { .. } => None,
        }
    }
}

/// Evaluate the sensing limit of `target` at `port` over a grid of one
/// preset parameter. Grid points that fail (instability, singularity, ...)
/// become skipped rows.
pub fn sweep(
    family: &PresetSpec,
    parameter: &str,
    grid: &[f64],
    tau: f64,
    port: usize,
    target: Target,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    // reject unknown parameters up front instead of skipping every row
    family.with_parameter(parameter, grid[0])?;
    let rows = grid
        .par_iter()
        .map(|&value| {
            let outcome = match evaluate_point(family, parameter, value, tau, port, target) {
                Ok(r) => SweepOutcome::Ok {
                    limit: r.limit,
                    bound: r.bound,
                    margin: r.margin,
                    response_mag: r.response_mag,
                },
                Err(e) => SweepOutcome::Skipped {
                    reason: e.to_string(),
                },
            };
            SweepRow { value, outcome }
        })
        .collect();
    Ok(rows)
}

fn evaluate_point(
    family: &PresetSpec,
    parameter: &str,
    value: f64,
    tau: f64,
    port: usize,
    target: Target,
) -> Result<SensingReport> {
    let p = family.with_parameter(parameter, value)?.build()?;
    analytic::sensing_limit(&p.network, &p.drive, port, target, tau)
}

/// `count` logarithmically spaced points from `start` to `stop` inclusive.
pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
