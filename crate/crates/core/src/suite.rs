//! Randomized below-threshold networks and the bound-verification suite.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, SensingReport};
use crate::error::Result;
use crate::model::{CMatrix, DriveSpec, ModeParams, SensorNetwork, Target};

/// Tolerance of the bound checks: margin ≥ −REL_TOL·bound.
pub const REL_TOL: f64 = 1e-9;

const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// Independent complex couplings in both directions.
    Generic,
    /// Hermitian couplings, μ_ji = μ_ij*.
    Reciprocal,
    /// Strongly one-way couplings.
    NonReciprocal,
    /// Two-mode PT-like pair a small distance from its exceptional point.
    NearEp,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 4] = [
        InstanceKind::Generic,
        InstanceKind::Reciprocal,
        InstanceKind::NonReciprocal,
        InstanceKind::NearEp,
    ];
}

/// One random evaluation point.
#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: InstanceKind,
    pub network: SensorNetwork,
    pub drive: DriveSpec,
    pub port: usize,
    pub target: Target,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Frequency,
    Coupling,
}

fn polar<R: Rng>(rng: &mut R, max_mag: f64) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.0..max_mag), rng.random_range(0.0..2.0 * PI))
}

fn random_mode<R: Rng>(rng: &mut R) -> ModeParams {
    let kappa_ex = rng.random_range(0.05..2.0);
    let kappa_0 = rng.random_range(0.05..2.0);
    let g = if rng.random_bool(0.5) {
        0.0
    } else {
        rng.random_range(0.0..0.95) * (kappa_ex + kappa_0)
    };
    ModeParams::new(rng.random_range(-1.0..1.0), kappa_ex, kappa_0, g)
}

/// Random network of the given kind; may be unstable.
pub fn random_network<R: Rng>(
    rng: &mut R,
    kind: InstanceKind,
    min_modes: usize,
    max_modes: usize,
) -> Result<SensorNetwork> {
    if kind == InstanceKind::NearEp {
        return near_ep_pair(rng);
    }
    let n = rng.random_range(min_modes..=max_modes);
    let modes: Vec<ModeParams> = (0..n).map(|_| random_mode(rng)).collect();
    let mut mu = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            match kind {
                InstanceKind::Reciprocal => {
                    let z = polar(rng, 1.0);
                    mu[(i, j)] = z;
                    mu[(j, i)] = z.conj();
                }
                InstanceKind::Generic => {
                    mu[(i, j)] = polar(rng, 1.0);
                    mu[(j, i)] = polar(rng, 1.0);
                }
                InstanceKind::NonReciprocal => {
                    let strong = polar(rng, 1.5);
                    let weak = polar(rng, 0.05);
                    if rng.random_bool(0.5) {
                        mu[(i, j)] = strong;
                        mu[(j, i)] = weak;
                    } else {
                        mu[(i, j)] = weak;
                        mu[(j, i)] = strong;
                    }
                }
                InstanceKind::NearEp => unreachable!(),
            }
        }
    }
    SensorNetwork::new(modes, mu)
}

fn near_ep_pair<R: Rng>(rng: &mut R) -> Result<SensorNetwork> {
    let gamma = rng.random_range(0.2..1.0);
    let offset = gamma * rng.random_range(1.02..2.0);
    let epsilon = 10f64.powf(rng.random_range(-6.0..-2.0));
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mu = gamma + sign * epsilon;
    let kappa_0 = rng.random_range(0.05..1.0) * 2.0 * (offset - gamma);
    let kappa_ex1 = 2.0 * (offset + gamma) - kappa_0;
    let kappa_ex2 = rng.random_range(0.05..1.0);
    let g2 = kappa_0 + kappa_ex2 - 2.0 * (offset - gamma);
    let w0 = rng.random_range(-1.0..1.0);
    let modes = vec![
        ModeParams::new(w0, kappa_ex1, kappa_0, 0.0),
        ModeParams::new(w0, kappa_ex2, kappa_0, g2),
    ];
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
    let z = Complex64::new(0.0, 0.0);
    // μ12·μ21 = μ² keeps the EP location regardless of the phase
    let mu = CMatrix::from_row_slice(2, 2, &[z, mu * phase, mu * phase.conj(), z]);
    SensorNetwork::new(modes, mu)
}

fn random_drive<R: Rng>(rng: &mut R, n: usize) -> Result<DriveSpec> {
    let mut a_in: Vec<Complex64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.6) {
                polar(rng, 3.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    if a_in.iter().all(|z| z.norm() == 0.0) {
        let p = rng.random_range(0..n);
        a_in[p] = Complex64::new(1.0, 0.0);
    }
    DriveSpec::new(rng.random_range(-1.0..1.0), a_in)
}

/// Draw until a network of `kind` yields a valid sensing-limit evaluation.
/// Returns the instance, its report and the number of rejected draws.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    kind: InstanceKind,
    target_kind: TargetKind,
    max_modes: usize,
) -> (Instance, SensingReport, usize) {
    let min_modes = match target_kind {
        TargetKind::Frequency => 1,
        TargetKind::Coupling => 2,
    };
    let max_modes = max_modes.max(min_modes);
    for attempt in 0..MAX_ATTEMPTS {
        let Ok(network) = random_network(rng, kind, min_modes, max_modes) else {
            continue;
        };
        let n = network.len();
        let Ok(drive) = random_drive(rng, n) else {
            continue;
        };
        let port = rng.random_range(0..n);
        let target = match target_kind {
            TargetKind::Frequency => Target::Frequency(rng.random_range(0..n)),
            TargetKind::Coupling => {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                Target::Coupling(i, j)
            }
        };
        let Ok(stab) = network.stability() else {
            continue;
        };
        if !stab.below_threshold {
            continue;
        }
        let tau = (1.5 * analytic::AVERAGING_DECAY_TIMES / stab.decay_margin).max(1e3);
        if let Ok(report) = analytic::sensing_limit(&network, &drive, port, target, tau) {
            let inst = Instance {
                kind,
                network,
                drive,
                port,
                target,
                tau,
            };
            return (inst, report, attempt);
        }
    }
    panic!("no valid {kind:?} instance in {MAX_ATTEMPTS} draws");
}

/// Per-instance outcome of the bound suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub index: usize,
    pub kind: InstanceKind,
    pub n_modes: usize,
    pub reciprocal: bool,
    pub port: usize,
    pub target: String,
    pub tau: f64,
    pub limit: f64,
    pub bound: f64,
    pub margin: f64,
    /// margin / bound.
    pub rel_margin: f64,
    pub passed: bool,
}

/// Aggregated suite result.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub suite: &'static str,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub rejected_draws: usize,
    pub min_rel_margin: f64,
    #[serde(skip)]
    pub records: Vec<CheckRecord>,
}

/// Draw `instances` random stable networks (kinds cycled) and check the
/// frequency or coupling bound on each.
pub fn run_bound_suite(
    seed: u64,
    instances: usize,
    max_modes: usize,
    target_kind: TargetKind,
) -> SuiteSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejected_draws = 0;
    let drawn: Vec<(Instance, SensingReport)> = (0..instances)
        .map(|i| {
            let kind = InstanceKind::ALL[i % InstanceKind::ALL.len()];
            let (inst, report, rejected) = random_instance(&mut rng, kind, target_kind, max_modes);
            rejected_draws += rejected;
            (inst, report)
        })
        .collect();
    let records: Vec<CheckRecord> = drawn
        .par_iter()
        .enumerate()
        .map(|(index, (inst, r))| CheckRecord {
            index,
            kind: inst.kind,
            n_modes: inst.network.len(),
            reciprocal: inst.network.is_reciprocal(),
            port: inst.port,
            target: inst.target.to_string(),
            tau: inst.tau,
            limit: r.limit,
            bound: r.bound,
            margin: r.margin,
            rel_margin: r.margin / r.bound,
            passed: r.respects_bound(REL_TOL),
        })
        .collect();
    let passed = records.iter().filter(|r| r.passed).count();
    SuiteSummary {
        suite: match target_kind {
            TargetKind::Frequency => "frequency_bound",
            TargetKind::Coupling => "coupling_bound",
        },
        instances,
        passed,
        failed: instances - passed,
        rejected_draws,
        min_rel_margin: records
            .iter()
            .map(|r| r.rel_margin)
            .fold(f64::INFINITY, f64::min),
        records,
    }
}
