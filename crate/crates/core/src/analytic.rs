//! Closed-form engine: steady states, cofactor responses, channel-resolved
//! output noise, homodyne SNR and sensing limits.
//!
//! All quantities are evaluated in the frame rotating at the drive
//! frequency. For a mode whose intrinsic loss κ_0 is the sensed quantity the
//! analogous limit is √κ_0/√(nτ); no response operation is provided for it.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CMatrix, DriveSpec, SensorNetwork, StabilityDiagnosis, Target};

/// Relative floor on |Det χ| (scaled by the Hadamard bound ∏ ‖row_i‖).
pub const SINGULARITY_FLOOR: f64 = 1e-12;
/// τ must exceed this many decay times.
pub const AVERAGING_DECAY_TIMES: f64 = 100.0;
/// Responses below this magnitude are treated as zero.
pub const INSENSITIVE_RESPONSE: f64 = 1e-30;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// χ(w) together with its determinant and inverse.
///
/// Cofactors follow from A_ij = Det·(χ⁻¹)_ji, one LU factorization for all n².
#[derive(Debug, Clone)]
pub struct Resolvent {
    chi: CMatrix,
    det: Complex64,
    inverse: CMatrix,
}

impl Resolvent {
    pub fn new(net: &SensorNetwork, w: f64) -> Result<Self> {
        let chi = net.chi(w);
        let hadamard: f64 = chi.row_iter().map(|r| r.norm()).product();
        let floor = SINGULARITY_FLOOR * hadamard;
        let lu = chi.clone().lu();
        let det = lu.determinant();
        if !(det.norm() >= floor) || det.norm() == 0.0 {
            return Err(Error::NearSingular {
                det: det.norm(),
                floor,
            });
        }
        let inverse = lu.try_inverse().ok_or(Error::NearSingular {
            det: det.norm(),
            floor,
        })?;
        Ok(Self { chi, det, inverse })
    }

    pub fn chi(&self) -> &CMatrix {
        &self.chi
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    /// χ⁻¹ = adj(χ)/Det.
    pub fn inverse(&self) -> &CMatrix {
        &self.inverse
    }

    /// (i, j) cofactor A_ij of χ.
    pub fn cofactor(&self, i: usize, j: usize) -> Complex64 {
        self.det * self.inverse[(j, i)]
    }
}

/// Mean intracavity and output amplitudes under a coherent drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a_tilde: Vec<Complex64>,
    pub n_photons: Vec<f64>,
    pub a_out_tilde: Vec<Complex64>,
}

/// Solve χ(w_in)·ã = i·K_ex^{1/2}·ã_in and apply a_out = a_in − √κ_ex·a.
pub fn steady_state(net: &SensorNetwork, drive: &DriveSpec) -> Result<SteadyState> {
    net.require_below_threshold()?;
    drive.check_len(net.len())?;
    let res = Resolvent::new(net, drive.w_in)?;
    Ok(steady_state_with(net, drive, &res))
}

fn steady_state_with(net: &SensorNetwork, drive: &DriveSpec, res: &Resolvent) -> SteadyState {
    let source = drive_source(net, drive);
    let a = res.inverse() * source;
    let a_tilde: Vec<Complex64> = a.iter().copied().collect();
    let n_photons = a_tilde.iter().map(|z| z.norm_sqr()).collect();
    let a_out_tilde = net
        .modes()
        .iter()
        .zip(drive.a_in())
        .zip(&a_tilde)
        .map(|((m, &a_in), &a)| a_in - m.kappa_ex.sqrt() * a)
        .collect();
    SteadyState {
        a_tilde,
        n_photons,
        a_out_tilde,
    }
}

/// i·K_ex^{1/2}·ã_in.
pub(crate) fn drive_source(net: &SensorNetwork, drive: &DriveSpec) -> DVector<Complex64> {
    DVector::from_iterator(
        net.len(),
        net.modes()
            .iter()
            .zip(drive.a_in())
            .map(|(m, &a)| I * m.kappa_ex.sqrt() * a),
    )
}

/// d ã_out,i / dθ for every port i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCoefficient {
    pub target: Target,
    pub per_port: Vec<Complex64>,
}

/// Shared evaluation state for one (network, drive) pair.
struct Linearization {
    stability: StabilityDiagnosis,
    res: Resolvent,
    steady: SteadyState,
}

impl Linearization {
    fn new(net: &SensorNetwork, drive: &DriveSpec) -> Result<Self> {
        let stability = net.require_below_threshold()?;
        drive.check_len(net.len())?;
        let res = Resolvent::new(net, drive.w_in)?;
        let steady = steady_state_with(net, drive, &res);
        Ok(Self {
            stability,
            res,
            steady,
        })
    }

    fn response(&self, net: &SensorNetwork, target: Target) -> Result<ResponseCoefficient> {
        net.check_target(target)?;
        let n = net.len();
        let a = &self.steady.a_tilde;
        let det = self.res.det();
        let per_port = (0..n)
            .map(|i| {
                let sqrt_ex = net.mode(i).kappa_ex.sqrt();
                let d_ai = match target {
                    // χ Δã = e_k ã_k Δw  =>  Δã_i = A_ki ã_k / Det
                    Target::Frequency(k) => self.res.cofactor(k, i) * a[k] / det,
                    // χ Δã = (ã_q e_p + ã_p e_q) Δμ
                    Target::Coupling(p, q) => {
                        (self.res.cofactor(p, i) * a[q] + self.res.cofactor(q, i) * a[p]) / det
                    }
                };
                -sqrt_ex * d_ai
            })
            .collect();
        Ok(ResponseCoefficient { target, per_port })
    }
}

/// Derivative of the output means with respect to a shift of w_k.
pub fn frequency_response(
    net: &SensorNetwork,
    drive: &DriveSpec,
    k: usize,
) -> Result<ResponseCoefficient> {
    Linearization::new(net, drive)?.response(net, Target::Frequency(k))
}

/// Derivative of the output means with respect to Δμ added to μ_ij and μ_ji.
pub fn coupling_response(
    net: &SensorNetwork,
    drive: &DriveSpec,
    i: usize,
    j: usize,
) -> Result<ResponseCoefficient> {
    Linearization::new(net, drive)?.response(net, Target::Coupling(i, j))
}

pub fn response(
    net: &SensorNetwork,
    drive: &DriveSpec,
    target: Target,
) -> Result<ResponseCoefficient> {
    Linearization::new(net, drive)?.response(net, target)
}

/// Noise entering the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Port input vacuum δa_in,j.
    Input(usize),
    /// Intrinsic-loss noise δf_j.
    Intrinsic(usize),
    /// Gain noise b_j (creation-ordered).
    Gain(usize),
}

/// Positive- and negative-frequency output NSDs with the channel breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePair {
    /// S_{δa_out δa_out}(w).
    pub s_plus: f64,
    /// S_{δa†_out δa†_out}(−w).
    pub s_minus: f64,
    /// |transfer|² of every channel into the port.
    pub per_channel: Vec<(Channel, f64)>,
}

impl NoisePair {
    /// Total homodyne noise density s_plus + s_minus.
    pub fn total(&self) -> f64 {
        self.s_plus + self.s_minus
    }
}

/// Complex transfer of every noise channel into output port `port` at frequency `w`.
pub fn noise_transfer(
    net: &SensorNetwork,
    port: usize,
    w: f64,
) -> Result<Vec<(Channel, Complex64)>> {
    net.require_below_threshold()?;
    let res = Resolvent::new(net, w)?;
    noise_transfer_with(net, port, &res)
}

fn noise_transfer_with(
    net: &SensorNetwork,
    port: usize,
    res: &Resolvent,
) -> Result<Vec<(Channel, Complex64)>> {
    let n = net.len();
    if port >= n {
        return Err(Error::IndexOutOfRange(format!("port {port} of {n}")));
    }
    let g = res.inverse();
    let sqrt_ex_i = net.mode(port).kappa_ex.sqrt();
    let mut out = Vec::with_capacity(3 * n);
    for (j, m) in net.modes().iter().enumerate() {
        // G_ij = A_ji / Det
        let base = -I * sqrt_ex_i * g[(port, j)];
        let direct = if j == port { 1.0 } else { 0.0 };
        out.push((Channel::Input(j), direct + base * m.kappa_ex.sqrt()));
        out.push((Channel::Intrinsic(j), base * m.kappa_0.sqrt()));
        out.push((Channel::Gain(j), base * m.g.sqrt()));
    }
    Ok(out)
}

/// Output noise spectral densities at `port`, frequency `w`.
pub fn output_noise_pair(net: &SensorNetwork, port: usize, w: f64) -> Result<NoisePair> {
    net.require_below_threshold()?;
    let res = Resolvent::new(net, w)?;
    noise_pair_with(net, port, &res)
}

fn noise_pair_with(net: &SensorNetwork, port: usize, res: &Resolvent) -> Result<NoisePair> {
    let per_channel: Vec<(Channel, f64)> = noise_transfer_with(net, port, res)?
        .into_iter()
        .map(|(c, t)| (c, t.norm_sqr()))
        .collect();
    let (mut s_plus, mut s_minus) = (0.0, 0.0);
    for &(c, v) in &per_channel {
        match c {
            Channel::Input(_) | Channel::Intrinsic(_) => s_plus += v,
            Channel::Gain(_) => s_minus += v,
        }
    }
    Ok(NoisePair {
        s_plus,
        s_minus,
        per_channel,
    })
}

/// s_plus − s_minus − 1. Zero whenever the output commutator is preserved;
/// reported, never asserted, for non-reciprocal networks.
pub fn commutator_gap(net: &SensorNetwork, port: usize, w: f64) -> Result<f64> {
    let p = output_noise_pair(net, port, w)?;
    Ok(p.s_plus - p.s_minus - 1.0)
}

fn check_tau(tau: f64, stability: &StabilityDiagnosis) -> Result<()> {
    let required = AVERAGING_DECAY_TIMES / stability.decay_margin;
    if !(tau.is_finite() && tau >= required) {
        return Err(Error::AveragingTime { tau, required });
    }
    Ok(())
}

/// Optimal-phase SNR 2|Δã_out·δ| / √((s_plus+s_minus)/τ), homodyne gain C = 1.
pub fn homodyne_snr(
    net: &SensorNetwork,
    drive: &DriveSpec,
    port: usize,
    target: Target,
    tau: f64,
    delta: f64,
) -> Result<f64> {
    let (z, noise_std) = signal_and_noise(net, drive, port, target, tau)?;
    Ok(2.0 * (z * delta).norm() / noise_std)
}

/// SNR at a fixed homodyne phase φ: |Δ⟨Q⟩| / std, Δ⟨Q⟩ = z e^{iφ}δ + c.c.
pub fn homodyne_snr_at_phase(
    net: &SensorNetwork,
    drive: &DriveSpec,
    port: usize,
    target: Target,
    tau: f64,
    delta: f64,
    phase: f64,
) -> Result<f64> {
    let (z, noise_std) = signal_and_noise(net, drive, port, target, tau)?;
    let dq = 2.0 * (z * Complex64::from_polar(1.0, phase) * delta).re;
    Ok(dq.abs() / noise_std)
}

fn signal_and_noise(
    net: &SensorNetwork,
    drive: &DriveSpec,
    port: usize,
    target: Target,
    tau: f64,
) -> Result<(Complex64, f64)> {
    let lin = Linearization::new(net, drive)?;
    check_tau(tau, &lin.stability)?;
    let resp = lin.response(net, target)?;
    let noise = noise_pair_with(net, port, &lin.res)?;
    Ok((resp.per_port[port], (noise.total() / tau).sqrt()))
}

/// Result of one sensing-limit evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingReport {
    pub port: usize,
    pub target: Target,
    pub tau: f64,
    /// |Δã_out| per unit perturbation at `port`.
    pub response_mag: f64,
    /// √((s_plus+s_minus)/τ).
    pub noise_std: f64,
    /// SNR per unit perturbation.
    pub snr_coeff: f64,
    /// Perturbation with SNR = 1.
    pub limit: f64,
    /// Fundamental (or coupling) bound for the target.
    pub bound: f64,
    /// limit − bound.
    pub margin: f64,
    /// Intracavity photon numbers at the operating point.
    pub n_photons: Vec<f64>,
}

impl SensingReport {
    /// margin ≥ −rel·bound.
    pub fn respects_bound(&self, rel: f64) -> bool {
        self.margin >= -rel * self.bound
    }
}

/// Smallest perturbation of `target` resolvable at `port` in time `tau`.
pub fn sensing_limit(
    net: &SensorNetwork,
    drive: &DriveSpec,
    port: usize,
    target: Target,
    tau: f64,
) -> Result<SensingReport> {
    let lin = Linearization::new(net, drive)?;
    check_tau(tau, &lin.stability)?;
    let resp = lin.response(net, target)?;
    if port >= net.len() {
        return Err(Error::IndexOutOfRange(format!("port {port}")));
    }
    let response_mag = resp.per_port[port].norm();
    if !(response_mag >= INSENSITIVE_RESPONSE) {
        return Err(Error::InsensitivePort {
            port,
            magnitude: response_mag,
        });
    }
    let noise = noise_pair_with(net, port, &lin.res)?;
    let noise_std = (noise.total() / tau).sqrt();
    let limit = noise_std / (2.0 * response_mag);
    let n = &lin.steady.n_photons;
    let bound = match target {
        Target::Frequency(k) => fundamental_bound(net.mode(k).kappa_0, n[k], tau)?,
        Target::Coupling(i, j) => coupling_limit_bound(
            net.mode(i).kappa_0,
            net.mode(j).kappa_0,
            n[i],
            n[j],
            tau,
        )?,
    };
    Ok(SensingReport {
        port,
        target,
        tau,
        response_mag,
        noise_std,
        snr_coeff: 1.0 / limit,
        limit,
        bound,
        margin: limit - bound,
        n_photons: n.clone(),
    })
}

fn require_positive(args: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in args {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// √κ_0 / (2√(nτ)).
pub fn fundamental_bound(kappa_0: f64, n: f64, tau: f64) -> Result<f64> {
    require_positive(&[("kappa_0", kappa_0), ("n", n), ("tau", tau)])?;
    Ok(kappa_0.sqrt() / (2.0 * (n * tau).sqrt()))
}

/// √(κ_0 + g) / (2√(nτ)), the tighter floor of a single cavity with gain.
pub fn gain_bound(kappa_0: f64, g: f64, n: f64, tau: f64) -> Result<f64> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::InvalidArgument(format!("g must be non-negative, got {g}")));
    }
    fundamental_bound(kappa_0 + g, n, tau)
}

/// 1 / ((2√n₂/√κ₀₁ + 2√n₁/√κ₀₂)·√τ) for a shift of the (1,2) coupling.
pub fn coupling_limit_bound(
    kappa_01: f64,
    kappa_02: f64,
    n_1: f64,
    n_2: f64,
    tau: f64,
) -> Result<f64> {
    require_positive(&[
        ("kappa_01", kappa_01),
        ("kappa_02", kappa_02),
        ("n_1", n_1),
        ("n_2", n_2),
        ("tau", tau),
    ])?;
    let s = 2.0 * n_2.sqrt() / kappa_01.sqrt() + 2.0 * n_1.sqrt() / kappa_02.sqrt();
    Ok(1.0 / (s * tau.sqrt()))
}

/// √κ_0 / (4√(nτ)): the coupling bound with κ₀₁ = κ₀₂ = κ_0 and n₁ = n₂ = n.
pub fn symmetric_coupling_bound(kappa_0: f64, n: f64, tau: f64) -> Result<f64> {
    require_positive(&[("kappa_0", kappa_0), ("n", n), ("tau", tau)])?;
    Ok(kappa_0.sqrt() / (4.0 * (n * tau).sqrt()))
}

/// How the drive is adjusted while κ_ex is swept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Keep the input amplitudes as given.
    FixedInput,
    /// Rescale the drive so the target mode holds this many photons.
    FixedPhotons(f64),
}

/// Rescale `drive` so mode `k` of `net` holds `n_target` photons.
pub fn normalize_drive(
    net: &SensorNetwork,
    drive: &DriveSpec,
    k: usize,
    n_target: f64,
) -> Result<DriveSpec> {
    require_positive(&[("n_target", n_target)])?;
    let ss = steady_state(net, drive)?;
    let n = *ss
        .n_photons
        .get(k)
        .ok_or_else(|| Error::IndexOutOfRange(format!("mode {k}")))?;
    if !(n > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mode {k} is not excited by the drive"
        )));
    }
    drive.scaled((n_target / n).sqrt())
}

/// Grid minimizer of the frequency sensing limit over κ_ex of the target mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOptimum {
    pub kappa_ex: f64,
    pub limit: f64,
    pub report: SensingReport,
}

/// Sweep κ_ex of mode `k` over `grid`, probing port `k` for a shift of w_k.
pub fn optimize_coupling(
    template: &SensorNetwork,
    drive: &DriveSpec,
    k: usize,
    tau: f64,
    grid: &[f64],
    normalization: Normalization,
) -> Result<CouplingOptimum> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best: Option<CouplingOptimum> = None;
    for &kappa_ex in grid {
        if !(kappa_ex.is_finite() && kappa_ex > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid value kappa_ex = {kappa_ex} must be positive"
            )));
        }
        let mut mode = *template.modes().get(k).ok_or_else(|| {
            Error::IndexOutOfRange(format!("mode {k} of {}", template.len()))
        })?;
        mode.kappa_ex = kappa_ex;
        let net = template.with_mode(k, mode)?;
        let drive = match normalization {
            Normalization::FixedInput => drive.clone(),
            Normalization::FixedPhotons(n) => normalize_drive(&net, drive, k, n)?,
        };
        let report = sensing_limit(&net, &drive, k, Target::Frequency(k), tau)?;
        if best.as_ref().is_none_or(|b| report.limit < b.limit) {
            best = Some(CouplingOptimum {
                kappa_ex,
                limit: report.limit,
                report,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModeParams;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(w0: f64, kex: f64, k0: f64, g: f64) -> SensorNetwork {
        SensorNetwork::uncoupled(vec![ModeParams::new(w0, kex, k0, g)]).unwrap()
    }

    fn two_mode(m1: ModeParams, m2: ModeParams, mu12: Complex64, mu21: Complex64) -> SensorNetwork {
        let mu = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), mu12, mu21, c(0.0, 0.0)]);
        SensorNetwork::new(vec![m1, m2], mu).unwrap()
    }

    #[test]
    fn critical_coupling_absorbs_everything() {
        // ã = 2√κ_ex ã_in / κ = 5, ã_out = 5 − 5 = 0.
        let net = single(3.0, 1.0, 1.0, 0.0);
        let drive = DriveSpec::new(3.0, vec![c(5.0, 0.0)]).unwrap();
        let ss = steady_state(&net, &drive).unwrap();
        assert_abs_diff_eq!(ss.a_tilde[0].re, 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ss.a_tilde[0].im, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ss.n_photons[0], 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ss.a_out_tilde[0].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn decoupled_mode_stays_dark() {
        let net = SensorNetwork::uncoupled(vec![
            ModeParams::passive(0.0, 1.0, 1.0),
            ModeParams::passive(0.3, 0.5, 1.0),
        ])
        .unwrap();
        let drive = DriveSpec::single_port(0.1, 2, 0, c(1.0, 0.5)).unwrap();
        let ss = steady_state(&net, &drive).unwrap();
        assert_eq!(ss.a_tilde[1], c(0.0, 0.0));
    }

    #[test]
    fn steady_state_residual() {
        let net = two_mode(
            ModeParams::new(0.2, 0.7, 0.4, 0.3),
            ModeParams::new(-0.1, 0.3, 0.9, 0.1),
            c(0.4, 0.2),
            c(-0.1, 0.2),
        );
        let drive = DriveSpec::new(0.05, vec![c(1.0, -0.2), c(0.3, 0.8)]).unwrap();
        let ss = steady_state(&net, &drive).unwrap();
        let a = DVector::from_vec(ss.a_tilde.clone());
        let rhs = drive_source(&net, &drive);
        let resid = (net.chi(drive.w_in) * a - &rhs).norm();
        assert!(resid <= 1e-10 * rhs.norm());
    }

    #[test]
    fn above_threshold_and_singular_rejected() {
        let net = single(0.0, 1.0, 1.0, 2.0);
        let drive = DriveSpec::new(0.0, vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            steady_state(&net, &drive),
            Err(Error::AboveThreshold { .. })
        ));
        // χ(0) = [[i, -1], [-1, -i]] has Det = 0
        let net = two_mode(
            ModeParams::passive(0.0, 1.0, 1.0),
            ModeParams::new(0.0, 1.0, 1.0, 4.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        );
        assert!(matches!(
            Resolvent::new(&net, 0.0),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn single_mode_response_matches_closed_form() {
        let (w0, kex, k0, g, w_in) = (0.4, 0.8, 0.5, 0.3, 0.1);
        let net = single(w0, kex, k0, g);
        let drive = DriveSpec::new(w_in, vec![c(2.0, 1.0)]).unwrap();
        let ss = steady_state(&net, &drive).unwrap();
        let r = frequency_response(&net, &drive, 0).unwrap();
        let expected = -kex.sqrt() * ss.a_tilde[0] / c(w_in - w0, (kex + k0 - g) / 2.0);
        assert_relative_eq!(r.per_port[0].re, expected.re, max_relative = 1e-13);
        assert_relative_eq!(r.per_port[0].im, expected.im, max_relative = 1e-13);
    }

    #[test]
    fn two_mode_cross_port_response() {
        let m1 = ModeParams::new(0.1, 0.6, 0.5, 0.2);
        let m2 = ModeParams::new(-0.2, 0.9, 0.4, 0.0);
        let (mu12, mu21) = (c(0.3, 0.1), c(0.7, -0.2));
        let net = two_mode(m1, m2, mu12, mu21);
        let w = 0.05;
        let drive = DriveSpec::new(w, vec![c(1.0, 0.0), c(0.2, 0.4)]).unwrap();
        let ss = steady_state(&net, &drive).unwrap();
        let d1 = c(w - m1.w0, m1.net_loss() / 2.0);
        let d2 = c(w - m2.w0, m2.net_loss() / 2.0);
        let det = d1 * d2 - mu12 * mu21;

        let r = frequency_response(&net, &drive, 0).unwrap();
        let port2 = -m2.kappa_ex.sqrt() * mu21 * ss.a_tilde[0] / det;
        let port1 = -m1.kappa_ex.sqrt() * d2 * ss.a_tilde[0] / det;
        assert_relative_eq!((r.per_port[1] - port2).norm(), 0.0, epsilon = 1e-13);
        assert_relative_eq!((r.per_port[0] - port1).norm(), 0.0, epsilon = 1e-13);

        let rc = coupling_response(&net, &drive, 0, 1).unwrap();
        let port1 = -m1.kappa_ex.sqrt() * (d2 * ss.a_tilde[1] + mu12 * ss.a_tilde[0]) / det;
        assert_relative_eq!((rc.per_port[0] - port1).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn coupling_response_without_coupling() {
        let m = ModeParams::passive(0.0, 1.0, 1.0);
        let net = two_mode(m, m, c(0.0, 0.0), c(0.0, 0.0));
        let drive = DriveSpec::single_port(0.0, 2, 0, c(1.0, 0.0)).unwrap();
        let ss = steady_state(&net, &drive).unwrap();
        assert_eq!(ss.a_tilde[1], c(0.0, 0.0));
        let rc = coupling_response(&net, &drive, 0, 1).unwrap();
        // only the μ12·ã_1 term survives and μ12 = 0
        assert_abs_diff_eq!(rc.per_port[0].norm(), 0.0, epsilon = 1e-15);
        assert!(rc.per_port[1].norm() > 0.1);
        assert!(coupling_response(&net, &drive, 1, 1).is_err());
    }

    #[test]
    fn passive_single_mode_noise_is_vacuum() {
        let net = single(0.0, 0.7, 1.3, 0.0);
        for w in [-3.0, -0.2, 0.0, 0.5, 10.0] {
            let p = output_noise_pair(&net, 0, w).unwrap();
            assert_abs_diff_eq!(p.s_plus, 1.0, epsilon = 1e-12);
            assert_eq!(p.s_minus, 0.0);
        }
    }

    #[test]
    fn gain_cavity_matches_explicit_terms() {
        let (w0, kex, k0, g) = (0.0, 1.0, 0.6, 0.9);
        let net = single(w0, kex, k0, g);
        for w in [-1.0, 0.0, 0.37] {
            let d = c(w - w0, (kex + k0 - g) / 2.0);
            let p = output_noise_pair(&net, 0, w).unwrap();
            let s_plus =
                (c(w - w0, (k0 - g - kex) / 2.0) / d).norm_sqr() + k0 * kex / d.norm_sqr();
            let s_minus = g * kex / d.norm_sqr();
            assert_relative_eq!(p.s_plus, s_plus, max_relative = 1e-12);
            assert_relative_eq!(p.s_minus, s_minus, max_relative = 1e-12);
            assert_abs_diff_eq!(commutator_gap(&net, 0, w).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_mode_port1_channel_terms() {
        let m1 = ModeParams::new(0.1, 0.6, 0.5, 0.2);
        let m2 = ModeParams::new(-0.2, 0.9, 0.4, 0.3);
        let (mu12, mu21) = (c(0.3, 0.1), c(0.3, -0.1));
        let net = two_mode(m1, m2, mu12, mu21);
        let w = 0.15;
        let d1 = c(w - m1.w0, m1.net_loss() / 2.0);
        let d2 = c(w - m2.w0, m2.net_loss() / 2.0);
        let det = d1 * d2 - mu12 * mu21;
        let p = output_noise_pair(&net, 0, w).unwrap();
        let get = |ch: Channel| p.per_channel.iter().find(|(c, _)| *c == ch).unwrap().1;
        let dd = det.norm_sqr();
        let k = m1.kappa_ex;
        assert_relative_eq!(
            get(Channel::Input(0)),
            (det - I * k * d2).norm_sqr() / dd,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            get(Channel::Intrinsic(0)),
            k * m1.kappa_0 * d2.norm_sqr() / dd,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            get(Channel::Input(1)),
            k * m2.kappa_ex * mu12.norm_sqr() / dd,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            get(Channel::Intrinsic(1)),
            k * m2.kappa_0 * mu12.norm_sqr() / dd,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            get(Channel::Gain(0)),
            k * m1.g * d2.norm_sqr() / dd,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            get(Channel::Gain(1)),
            k * m2.g * mu12.norm_sqr() / dd,
            max_relative = 1e-12
        );
    }

    #[test]
    fn nonreciprocal_gap_is_reported() {
        let m = ModeParams::passive(0.0, 1.0, 1.0);
        let net = two_mode(m, m, c(1.0, 0.0), c(0.0, 0.0));
        let gap = commutator_gap(&net, 0, 0.0).unwrap();
        assert!(gap.is_finite());
    }

    #[test]
    fn snr_passive_resonance() {
        // SNR = 4√(κ_ex n τ)/κ · Δw ; with κ_ex = κ_0 = 1, n = 100, τ = 1e4, Δw = 5e-4 this is 1.
        let net = single(0.0, 1.0, 1.0, 0.0);
        let drive = DriveSpec::new(0.0, vec![c(10.0, 0.0)]).unwrap();
        let n = steady_state(&net, &drive).unwrap().n_photons[0];
        assert_abs_diff_eq!(n, 100.0, epsilon = 1e-10);
        let snr = homodyne_snr(&net, &drive, 0, Target::Frequency(0), 1e4, 5e-4).unwrap();
        assert_relative_eq!(snr, 1.0, max_relative = 1e-12);
        let closed = 4.0 * (1.0f64 * n * 1e4).sqrt() / 2.0 * 5e-4;
        assert_relative_eq!(snr, closed, max_relative = 1e-12);
        assert_eq!(
            homodyne_snr(&net, &drive, 0, Target::Frequency(0), 1e4, 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn per_phase_snr_peaks_at_closed_form() {
        let net = single(0.0, 1.0, 1.0, 0.0);
        let drive = DriveSpec::new(0.2, vec![c(3.0, 1.0)]).unwrap();
        let t = Target::Frequency(0);
        let best = homodyne_snr(&net, &drive, 0, t, 500.0, 1e-3).unwrap();
        let sampled = (0..720)
            .map(|k| {
                homodyne_snr_at_phase(&net, &drive, 0, t, 500.0, 1e-3, k as f64 * PI / 360.0)
                    .unwrap()
            })
            .fold(0.0, f64::max);
        assert!(sampled <= best * (1.0 + 1e-12));
        assert_relative_eq!(sampled, best, max_relative = 1e-4);
    }

    use std::f64::consts::PI;

    #[test]
    fn averaging_contract() {
        let net = single(0.0, 1.0, 1.0, 0.0);
        let drive = DriveSpec::new(0.0, vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            homodyne_snr(&net, &drive, 0, Target::Frequency(0), 99.0, 1e-3),
            Err(Error::AveragingTime { .. })
        ));
        assert!(homodyne_snr(&net, &drive, 0, Target::Frequency(0), 100.0, 1e-3).is_ok());
    }

    #[test]
    fn passive_limit_closed_form() {
        for kex in [0.2, 1.0, 3.5] {
            let net = single(0.0, kex, 1.0, 0.0);
            let drive = DriveSpec::new(0.0, vec![c(4.0, 0.0)]).unwrap();
            let tau = 1e3;
            let r = sensing_limit(&net, &drive, 0, Target::Frequency(0), tau).unwrap();
            let n = r.n_photons[0];
            let kappa = kex + 1.0;
            assert_relative_eq!(r.limit, kappa / (4.0 * (kex * n * tau).sqrt()), max_relative = 1e-12);
            assert_relative_eq!(r.snr_coeff * r.limit, 1.0, max_relative = 1e-14);
            assert!(r.respects_bound(1e-9));
        }
        let net = single(0.0, 1.0, 1.0, 0.0);
        let drive = DriveSpec::new(0.0, vec![c(10.0, 0.0)]).unwrap();
        let r = sensing_limit(&net, &drive, 0, Target::Frequency(0), 1e4).unwrap();
        assert_relative_eq!(r.limit, 5e-4, max_relative = 1e-12);
        assert_relative_eq!(r.bound, 5e-4, max_relative = 1e-12);
        assert_abs_diff_eq!(r.margin, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn insensitive_port_is_an_error() {
        let m = ModeParams::passive(0.0, 1.0, 1.0);
        let net = two_mode(m, m, c(0.0, 0.0), c(0.0, 0.0));
        let drive = DriveSpec::single_port(0.0, 2, 0, c(1.0, 0.0)).unwrap();
        assert!(matches!(
            sensing_limit(&net, &drive, 1, Target::Frequency(0), 1e3),
            Err(Error::InsensitivePort { port: 1, .. })
        ));
    }

    #[test]
    fn bound_arithmetic() {
        assert_relative_eq!(fundamental_bound(1.0, 100.0, 1e4).unwrap(), 5e-4, max_relative = 1e-15);
        assert_relative_eq!(fundamental_bound(1.0, 25.0, 100.0).unwrap(), 0.01, max_relative = 1e-15);
        let b = fundamental_bound(0.7, 30.0, 50.0).unwrap();
        assert_relative_eq!(fundamental_bound(0.7, 120.0, 50.0).unwrap(), b / 2.0, max_relative = 1e-15);
        assert!(fundamental_bound(0.0, 1.0, 1.0).is_err());
        assert!(fundamental_bound(1.0, -1.0, 1.0).is_err());

        assert_relative_eq!(
            coupling_limit_bound(1.0, 1.0, 100.0, 100.0, 1e4).unwrap(),
            2.5e-4,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            coupling_limit_bound(1.0, 1.0, 64.0, 64.0, 3.0).unwrap(),
            symmetric_coupling_bound(1.0, 64.0, 3.0).unwrap(),
            max_relative = 1e-15
        );
        // swapping (κ01, n2) with (κ02, n1)
        let a = coupling_limit_bound(0.3, 1.7, 20.0, 45.0, 9.0).unwrap();
        let b = coupling_limit_bound(1.7, 0.3, 45.0, 20.0, 9.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-15);
        assert!(coupling_limit_bound(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn optimize_coupling_finds_critical_coupling() {
        let net = single(0.0, 1.0, 1.0, 0.0);
        let drive = DriveSpec::new(0.0, vec![c(1.0, 0.0)]).unwrap();
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        for norm in [Normalization::FixedInput, Normalization::FixedPhotons(100.0)] {
            let opt = optimize_coupling(&net, &drive, 0, 1e4, &grid, norm).unwrap();
            assert_eq!(opt.kappa_ex, 1.0);
        }
        let one = optimize_coupling(&net, &drive, 0, 1e4, &[3.0], Normalization::FixedInput).unwrap();
        assert_eq!(one.kappa_ex, 3.0);
        assert_eq!(
            optimize_coupling(&net, &drive, 0, 1e4, &[], Normalization::FixedInput),
            Err(Error::EmptyGrid)
        );
    }

    #[test]
    fn optimize_coupling_with_gain_respects_gain_bound() {
        let (k0, g) = (1.0, 0.5);
        let net = single(0.0, 1.0, k0, g);
        let drive = DriveSpec::new(0.0, vec![c(1.0, 0.0)]).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| 0.1 * 1.1f64.powi(i)).collect();
        let tau = 1e4;
        let opt = optimize_coupling(&net, &drive, 0, tau, &grid, Normalization::FixedInput).unwrap();
        let n = opt.report.n_photons[0];
        assert!(opt.limit >= gain_bound(k0, g, n, tau).unwrap() * (1.0 - 1e-9));
    }
}
