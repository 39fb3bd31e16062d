//! Time-domain Langevin trajectories and phase diffusion.
//!
//! This module is an independent check on [`crate::analytic`]: it never
//! evaluates a transfer function. Amplitudes are integrated with
//! Euler–Maruyama in the frame rotating at the drive frequency,
//!
//! ```text
//! dα = [iχ(w_in)·α + K_ex^{1/2}·ã_in] dt + Σ_c √rate_c · dW_c
//! ```
//!
//! where every noise channel (port input, intrinsic loss, gain) is a complex
//! Wiener increment with Var[Re] = Var[Im] = dt/4. That is the symmetric-
//! ordered vacuum, so the homodyne variance of the time-averaged quadrature
//! equals Σ_c |T_c|²/τ = (s_plus + s_minus)/τ.
//!
//! Every trajectory owns two ChaCha8 streams derived from `(seed, index)`:
//! one for the coarse increments and one for Brownian-bridge refinements, so
//! a run with `refine = r` follows the same Brownian path as `refine = 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{DriveSpec, SensorNetwork, StabilityDiagnosis, Target};

/// Largest allowed dt in units of 1/ρ.
pub const DT_RATE_FRACTION: f64 = 0.01;
/// Burn-in must cover this many decay times.
pub const BURN_IN_DECAY_TIMES: f64 = 10.0;
/// Variance of Re and Im of a channel increment per unit time.
pub const QUADRATURE_NOISE_DENSITY: f64 = 0.25;

const GRID_TOL: f64 = 1e-9;

/// Integration and sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Base Euler–Maruyama step.
    pub dt: f64,
    /// Total simulated time including burn-in.
    pub t_total: f64,
    /// Discarded initial transient.
    pub burn_in: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Recording block; output integrals are stored per block.
    pub block: f64,
    /// Each base step is split into 2^refine sub-steps along the same path.
    #[serde(default)]
    pub refine: u32,
    /// Disable every noise channel.
    #[serde(default)]
    pub noiseless: bool,
}

impl SimConfig {
    /// Config sized for averaging windows of length `tau`: block = τ/10,
    /// dt at or below the cap, burn-in rounded up to whole blocks and
    /// `windows` τ-windows after it.
    pub fn for_network(
        net: &SensorNetwork,
        tau: f64,
        windows: usize,
        n_traj: usize,
        seed: u64,
    ) -> Result<Self> {
        let stab = net.require_below_threshold()?;
        if !(tau.is_finite() && tau > 0.0) || windows == 0 || n_traj == 0 {
            return Err(Error::SimConfig(format!(
                "tau = {tau}, windows = {windows}, n_traj = {n_traj}"
            )));
        }
        let block = tau / 10.0;
        let dt_max = DT_RATE_FRACTION / net.rate_scale();
        let steps = (block / dt_max).ceil().max(1.0);
        let dt = block / steps;
        let burn_blocks = (BURN_IN_DECAY_TIMES / stab.decay_margin / block).ceil().max(1.0);
        let burn_in = burn_blocks * block;
        Ok(Self {
            dt,
            t_total: burn_in + windows as f64 * tau,
            burn_in,
            n_traj,
            seed,
            block,
            refine: 0,
            noiseless: false,
        })
    }

    fn steps_per(&self, span: f64, what: &str) -> Result<usize> {
        let k = (span / self.dt).round();
        if !(k >= 1.0) || (k * self.dt - span).abs() > GRID_TOL * span {
            return Err(Error::SimConfig(format!(
                "{what} = {span} is not a whole number of steps dt = {}",
                self.dt
            )));
        }
        Ok(k as usize)
    }

    /// Check every invariant against `net`; returns its stability diagnosis.
    pub fn validate(&self, net: &SensorNetwork) -> Result<StabilityDiagnosis> {
        let stab = net.require_below_threshold()?;
        for (name, v) in [
            ("dt", self.dt),
            ("t_total", self.t_total),
            ("block", self.block),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::SimConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_traj == 0 {
            return Err(Error::SimConfig("n_traj must be positive".into()));
        }
        if self.refine > 10 {
            return Err(Error::SimConfig(format!("refine = {} is too deep", self.refine)));
        }
        let dt_max = DT_RATE_FRACTION / net.rate_scale();
        if self.dt > dt_max * (1.0 + 1e-12) {
            return Err(Error::SimConfig(format!(
                "dt = {} exceeds 0.01/rho = {dt_max}",
                self.dt
            )));
        }
        let min_burn = BURN_IN_DECAY_TIMES / stab.decay_margin;
        if !(self.burn_in >= min_burn * (1.0 - 1e-12)) {
            return Err(Error::SimConfig(format!(
                "burn_in = {} shorter than 10/decay_margin = {min_burn}",
                self.burn_in
            )));
        }
        if self.t_total <= self.burn_in {
            return Err(Error::SimConfig("t_total must exceed burn_in".into()));
        }
        self.steps_per(self.block, "block")?;
        if self.burn_in > 0.0 {
            self.steps_per(self.burn_in, "burn_in")?;
        }
        Ok(stab)
    }
}

/// Recorded output of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub n_ports: usize,
    pub n_blocks: usize,
    /// Duration of one recording block.
    pub block_dt: f64,
    pub decay_margin: f64,
    /// Per trajectory: ∫ α_out dt over every block, laid out `[block][port]`.
    pub blocks: Vec<Vec<Complex64>>,
    /// Per trajectory: post-burn-in time average of |α_i|².
    pub mean_occupation: Vec<Vec<f64>>,
    /// Per trajectory: amplitudes at the final step.
    pub final_state: Vec<Vec<Complex64>>,
}

impl Ensemble {
    pub fn n_traj(&self) -> usize {
        self.blocks.len()
    }

    /// Complex window averages (1/τ)∫α_out dt of `port`, trajectory-major.
    pub fn window_means(&self, port: usize, tau: f64) -> Result<Vec<Complex64>> {
        if port >= self.n_ports {
            return Err(Error::IndexOutOfRange(format!("port {port} of {}", self.n_ports)));
        }
        let required = analytic::AVERAGING_DECAY_TIMES / self.decay_margin;
        if !(tau >= required) {
            return Err(Error::AveragingTime { tau, required });
        }
        let k = (tau / self.block_dt).round();
        if !(k >= 1.0) || (k * self.block_dt - tau).abs() > GRID_TOL * tau {
            return Err(Error::TrajectoryLength(format!(
                "tau = {tau} is not a whole number of recording blocks ({})",
                self.block_dt
            )));
        }
        let k = k as usize;
        let windows = self.n_blocks / k;
        if windows == 0 {
            return Err(Error::TrajectoryLength(format!(
                "tau = {tau} longer than the recorded {} after burn-in",
                self.n_blocks as f64 * self.block_dt
            )));
        }
        let mut out = Vec::with_capacity(windows * self.n_traj());
        for traj in &self.blocks {
            for w in 0..windows {
                let sum: Complex64 = (w * k..(w + 1) * k)
                    .map(|b| traj[b * self.n_ports + port])
                    .sum();
                out.push(sum / tau);
            }
        }
        Ok(out)
    }
}

struct Integrator {
    n: usize,
    /// iχ(w_in), row-major.
    drift: Vec<Complex64>,
    source: Vec<Complex64>,
    a_in: Vec<Complex64>,
    sqrt_ex: Vec<f64>,
    /// (mode, amplitude) of every active channel; the input channel of mode
    /// i is listed first for that mode and flagged.
    channels: Vec<(usize, f64, bool)>,
}

impl Integrator {
    fn new(net: &SensorNetwork, drive: &DriveSpec, noiseless: bool) -> Self {
        let n = net.len();
        let i = Complex64::new(0.0, 1.0);
        let chi = net.chi(drive.w_in);
        let drift = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| i * chi[(r, c)])
            .collect();
        let sqrt_ex: Vec<f64> = net.modes().iter().map(|m| m.kappa_ex.sqrt()).collect();
        let source = sqrt_ex
            .iter()
            .zip(drive.a_in())
            .map(|(&s, &a)| s * a)
            .collect();
        let mut channels = Vec::new();
        if !noiseless {
            for (k, m) in net.modes().iter().enumerate() {
                // the input channel is always recorded, it feeds the output directly
                channels.push((k, m.kappa_ex.sqrt(), true));
                for rate in [m.kappa_0, m.g] {
                    if rate > 0.0 {
                        channels.push((k, rate.sqrt(), false));
                    }
                }
            }
        }
        Self {
            n,
            drift,
            source,
            a_in: drive.a_in().to_vec(),
            sqrt_ex,
            channels,
        }
    }
}

fn complex_normal<R: Rng>(rng: &mut R, sigma: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * sigma
}

fn trajectory_rngs(seed: u64, index: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut base = ChaCha8Rng::seed_from_u64(seed);
    base.set_stream(2 * index as u64);
    let mut bridge = ChaCha8Rng::seed_from_u64(seed);
    bridge.set_stream(2 * index as u64 + 1);
    (base, bridge)
}

/// Split a coarse increment over `h` into 2^levels sub-increments along the
/// Brownian bridge. `out` receives them in time order.
fn bridge_split<R: Rng>(
    total: Complex64,
    h: f64,
    levels: u32,
    rng: &mut R,
    out: &mut Vec<Complex64>,
) {
    out.clear();
    out.push(total);
    let mut span = h;
    for _ in 0..levels {
        let sigma = (QUADRATURE_NOISE_DENSITY * span / 4.0).sqrt();
        let mut next = Vec::with_capacity(out.len() * 2);
        for &w in out.iter() {
            let left = w / 2.0 + complex_normal(rng, sigma);
            next.push(left);
            next.push(w - left);
        }
        *out = next;
        span /= 2.0;
    }
}

struct TrajectoryRecord {
    blocks: Vec<Complex64>,
    mean_occupation: Vec<f64>,
    final_state: Vec<Complex64>,
}

fn run_trajectory(
    integ: &Integrator,
    cfg: &SimConfig,
    index: usize,
    burn_steps: usize,
    block_steps: usize,
    n_blocks: usize,
) -> TrajectoryRecord {
    let n = integ.n;
    let (mut base_rng, mut bridge_rng) = trajectory_rngs(cfg.seed, index);
    let sub = 1usize << cfg.refine;
    let h = cfg.dt / sub as f64;
    let sigma_base = (QUADRATURE_NOISE_DENSITY * cfg.dt).sqrt();
    let n_ch = integ.channels.len();

    let mut alpha = vec![Complex64::new(0.0, 0.0); n];
    let mut next = alpha.clone();
    let mut noise = vec![Complex64::new(0.0, 0.0); n_ch * sub];
    let mut split = Vec::with_capacity(sub);
    let mut blocks = vec![Complex64::new(0.0, 0.0); n_blocks * n];
    let mut occupation = vec![0.0; n];
    let total_steps = burn_steps + n_blocks * block_steps;

    for step in 0..total_steps {
        for (c, _) in integ.channels.iter().enumerate() {
            let coarse = complex_normal(&mut base_rng, sigma_base);
            if sub == 1 {
                noise[c] = coarse;
            } else {
                bridge_split(coarse, cfg.dt, cfg.refine, &mut bridge_rng, &mut split);
                for (s, w) in split.iter().enumerate() {
                    noise[s * n_ch + c] = *w;
                }
            }
        }
        let recording = step >= burn_steps;
        let block = if recording {
            (step - burn_steps) / block_steps
        } else {
            0
        };
        for s in 0..sub {
            let dw = &noise[s * n_ch..(s + 1) * n_ch];
            for r in 0..n {
                let row = &integ.drift[r * n..(r + 1) * n];
                let mut d = integ.source[r];
                for (m, a) in row.iter().zip(&alpha) {
                    d += m * a;
                }
                next[r] = alpha[r] + d * h;
            }
            if recording {
                for r in 0..n {
                    blocks[block * n + r] += (integ.a_in[r] - integ.sqrt_ex[r] * alpha[r]) * h;
                    occupation[r] += alpha[r].norm_sqr() * h;
                }
            }
            for (&(mode, amp, is_input), w) in integ.channels.iter().zip(dw) {
                next[mode] += amp * w;
                if recording && is_input {
                    blocks[block * n + mode] += w;
                }
            }
            std::mem::swap(&mut alpha, &mut next);
        }
    }
    let recorded = n_blocks as f64 * block_steps as f64 * cfg.dt;
    TrajectoryRecord {
        blocks,
        mean_occupation: occupation.into_iter().map(|o| o / recorded).collect(),
        final_state: alpha,
    }
}

/// Integrate `cfg.n_traj` independent trajectories, optionally with the
/// network shifted by `perturbation = (target, delta)`.
pub fn simulate(
    net: &SensorNetwork,
    drive: &DriveSpec,
    cfg: &SimConfig,
    perturbation: Option<(Target, f64)>,
) -> Result<Ensemble> {
    let net = match perturbation {
        Some((target, delta)) => net.perturbed(target, delta)?,
        None => net.clone(),
    };
    drive.check_len(net.len())?;
    let stab = cfg.validate(&net)?;
    let burn_steps = if cfg.burn_in > 0.0 {
        cfg.steps_per(cfg.burn_in, "burn_in")?
    } else {
        0
    };
    let block_steps = cfg.steps_per(cfg.block, "block")?;
    let block_dt = block_steps as f64 * cfg.dt;
    let n_blocks = ((cfg.t_total - burn_steps as f64 * cfg.dt) / block_dt + 1e-9).floor() as usize;
    if n_blocks == 0 {
        return Err(Error::TrajectoryLength(
            "no complete recording block after burn-in".into(),
        ));
    }
    let integ = Integrator::new(&net, drive, cfg.noiseless);
    let records: Vec<TrajectoryRecord> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| run_trajectory(&integ, cfg, i, burn_steps, block_steps, n_blocks))
        .collect();
    let mut ens = Ensemble {
        n_ports: net.len(),
        n_blocks,
        block_dt,
        decay_margin: stab.decay_margin,
        blocks: Vec::with_capacity(records.len()),
        mean_occupation: Vec::with_capacity(records.len()),
        final_state: Vec::with_capacity(records.len()),
    };
    for r in records {
        ens.blocks.push(r.blocks);
        ens.mean_occupation.push(r.mean_occupation);
        ens.final_state.push(r.final_state);
    }
    Ok(ens)
}

/// Empirical statistics of the time-averaged homodyne quadrature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomodyneEstimate {
    pub mean: f64,
    pub variance: f64,
    pub n_samples: usize,
    /// variance·√(2/(n_samples − 1)).
    pub stderr_of_variance: f64,
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn quadratures(windows: &[Complex64], phase: f64) -> Vec<f64> {
    let rot = Complex64::from_polar(1.0, phase);
    windows.iter().map(|w| 2.0 * (rot * w).re).collect()
}

/// Statistics of Q̄ = (1/τ)∫(e^{iφ}α_out + c.c.) dt over non-overlapping
/// τ-windows of every trajectory.
pub fn homodyne_estimate(
    ens: &Ensemble,
    port: usize,
    phase: f64,
    tau: f64,
) -> Result<HomodyneEstimate> {
    let windows = ens.window_means(port, tau)?;
    if windows.len() < 2 {
        return Err(Error::TrajectoryLength(
            "need at least two τ-windows for a variance".into(),
        ));
    }
    let q = quadratures(&windows, phase);
    let (mean, variance) = mean_and_variance(&q);
    let n = q.len();
    Ok(HomodyneEstimate {
        mean,
        variance,
        n_samples: n,
        stderr_of_variance: variance * (2.0 / (n as f64 - 1.0)).sqrt(),
    })
}

/// Empirical versus closed-form SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSnr {
    pub empirical: f64,
    pub analytic: f64,
    /// Ensemble mean of the complex window average, perturbed minus base.
    pub mean_difference: Complex64,
    pub pooled_std: f64,
    /// Homodyne phase used, −arg(mean_difference).
    pub phase: f64,
    pub n_samples: usize,
}

/// Run base and perturbed ensembles with the same seed and compare the
/// empirical SNR of the mean shift to [`analytic::homodyne_snr`].
#[allow(clippy::too_many_arguments)]
pub fn mc_snr(
    net: &SensorNetwork,
    drive: &DriveSpec,
    port: usize,
    target: Target,
    delta: f64,
    cfg: &SimConfig,
    tau: f64,
) -> Result<McSnr> {
    let stab = net.require_below_threshold()?;
    if !(delta.abs() <= 0.01 * stab.decay_margin) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside the linear regime (<= {})",
            0.01 * stab.decay_margin
        )));
    }
    let base = simulate(net, drive, cfg, None)?;
    let pert = simulate(net, drive, cfg, Some((target, delta)))?;
    let wb = base.window_means(port, tau)?;
    let wp = pert.window_means(port, tau)?;
    if wb.len() < 2 {
        return Err(Error::TrajectoryLength(
            "need at least two τ-windows for a variance".into(),
        ));
    }
    let n = wb.len() as f64;
    let mean_difference: Complex64 = wp.iter().zip(&wb).map(|(p, b)| p - b).sum::<Complex64>() / n;
    let phase = if mean_difference.norm() > 0.0 {
        -mean_difference.arg()
    } else {
        0.0
    };
    let (mb, vb) = mean_and_variance(&quadratures(&wb, phase));
    let (mp, vp) = mean_and_variance(&quadratures(&wp, phase));
    let pooled_std = (0.5 * (vb + vp)).sqrt();
    Ok(McSnr {
        empirical: (mp - mb).abs() / pooled_std,
        analytic: analytic::homodyne_snr(net, drive, port, target, tau, delta)?,
        mean_difference,
        pooled_std,
        phase,
        n_samples: wb.len(),
    })
}

/// Schawlow–Townes linewidth δw = κ/(2n).
pub fn schawlow_townes_linewidth(kappa: f64, n: f64) -> Result<f64> {
    if !(kappa > 0.0 && n > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa}, n = {n}")));
    }
    Ok(kappa / (2.0 * n))
}

/// Frequency-estimation error √(δw/τ) of a free-running oscillator.
pub fn above_threshold_frequency_error(kappa: f64, n: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau = {tau}")));
    }
    Ok((schawlow_townes_linewidth(kappa, n)? / tau).sqrt())
}

/// Empirical phase-diffusion statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiffusionResult {
    /// Var[φ(t+τ) − φ(t)].
    pub var_phase: f64,
    /// Standard deviation of the estimator φ(τ)/τ.
    pub freq_std: f64,
    /// κ/(2n).
    pub delta_w: f64,
    pub trials: usize,
}

/// Increments per simulated phase path.
pub const PHASE_STEPS: usize = 64;

/// Simulate φ as a driftless Wiener process with diffusion δw = κ/(2n) and
/// measure the phase accumulated over τ.
pub fn phase_diffusion(
    kappa: f64,
    kappa_ex: f64,
    n: f64,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<PhaseDiffusionResult> {
    if !(kappa > 0.0 && n > 0.0 && tau > 0.0 && trials >= 2) {
        return Err(Error::InvalidArgument(format!(
            "kappa = {kappa}, n = {n}, tau = {tau}, trials = {trials}"
        )));
    }
    if !(kappa_ex >= 0.0 && kappa_ex <= kappa) {
        return Err(Error::InvalidArgument(format!(
            "kappa_ex = {kappa_ex} must lie in [0, kappa = {kappa}]"
        )));
    }
    let delta_w = schawlow_townes_linewidth(kappa, n)?;
    let sigma = (delta_w * tau / PHASE_STEPS as f64).sqrt();
    let phases: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            (0..PHASE_STEPS)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .sum()
        })
        .collect();
    let (_, var_phase) = mean_and_variance(&phases);
    let freq: Vec<f64> = phases.iter().map(|p| p / tau).collect();
    let (_, var_freq) = mean_and_variance(&freq);
    Ok(PhaseDiffusionResult {
        var_phase,
        freq_std: var_freq.sqrt(),
        delta_w,
        trials,
    })
}
