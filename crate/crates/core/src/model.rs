//! Sensor-network definitions and the effective non-Hermitian Hamiltonian.
//!
//! Units: ℏ = 1 and every rate or frequency is expressed in one user-chosen
//! rate unit. Photon numbers are the dimensionless |ã|².

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance of the Hermitian-coupling test.
pub const RECIPROCITY_TOL: f64 = 1e-12;
/// Relative factor in front of the rate scale that defines the stability threshold.
pub const STABILITY_REL_EPS: f64 = 1e-9;

const EIGEN_MAX_ITER: usize = 10_000;

/// Physical rates of one bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Resonance angular frequency.
    pub w0: f64,
    /// Coupling (port) loss rate.
    pub kappa_ex: f64,
    /// Intrinsic loss rate.
    pub kappa_0: f64,
    /// Linear gain rate.
    #[serde(default)]
    pub g: f64,
}

impl ModeParams {
    pub fn new(w0: f64, kappa_ex: f64, kappa_0: f64, g: f64) -> Self {
        Self {
            w0,
            kappa_ex,
            kappa_0,
            g,
        }
    }

    pub fn passive(w0: f64, kappa_ex: f64, kappa_0: f64) -> Self {
        Self::new(w0, kappa_ex, kappa_0, 0.0)
    }

    /// Total loss κ = κ_ex + κ_0.
    pub fn kappa(&self) -> f64 {
        self.kappa_ex + self.kappa_0
    }

    /// Net intensity decay κ − g.
    pub fn net_loss(&self) -> f64 {
        self.kappa() - self.g
    }

    fn validate(&self, mode: usize) -> Result<()> {
        if !self.w0.is_finite() {
            return Err(Error::InvalidRate {
                mode,
                name: "w0",
                value: self.w0,
            });
        }
        for (name, value) in [
            ("kappa_ex", self.kappa_ex),
            ("kappa_0", self.kappa_0),
            ("g", self.g),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidRate { mode, name, value });
            }
        }
        Ok(())
    }
}

/// Which parameter of the network is being sensed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Shift Δw of the resonance of one mode.
    Frequency(usize),
    /// Simultaneous shift Δμ added to both μ_ij and μ_ji.
    Coupling(usize, usize),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Frequency(k) => write!(f, "frequency:{k}"),
            Target::Coupling(i, j) => write!(f, "coupling:{i}-{j}"),
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    /// Parses the `Display` form, `frequency:k` or `coupling:i-j`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognized target `{s}`"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let index = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match kind.trim() {
            "frequency" => Ok(Target::Frequency(index(rest)?)),
            "coupling" => {
                let (i, j) = rest.split_once('-').ok_or_else(bad)?;
                Ok(Target::Coupling(index(i)?, index(j)?))
            }
            _ => Err(bad()),
        }
    }
}

/// Validated n-mode network: modes plus off-diagonal complex couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNetwork {
    modes: Vec<ModeParams>,
    mu: CMatrix,
    reciprocal: bool,
}

/// Build and validate a network. The diagonal of `mu` is zeroed.
pub fn build_network(modes: Vec<ModeParams>, mu: CMatrix) -> Result<SensorNetwork> {
    SensorNetwork::new(modes, mu)
}

impl SensorNetwork {
    pub fn new(modes: Vec<ModeParams>, mut mu: CMatrix) -> Result<Self> {
        let n = modes.len();
        if n == 0 {
            return Err(Error::EmptyNetwork);
        }
        if mu.nrows() != n || mu.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix is {}x{} but there are {} modes",
                mu.nrows(),
                mu.ncols(),
                n
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            m.validate(i)?;
        }
        if let Some(bad) = mu.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coupling entry {bad}"
            )));
        }
        for i in 0..n {
            mu[(i, i)] = Complex64::new(0.0, 0.0);
        }
        let reciprocal = is_hermitian(&mu);
        Ok(Self {
            modes,
            mu,
            reciprocal,
        })
    }

    /// Network without any inter-mode coupling.
    pub fn uncoupled(modes: Vec<ModeParams>) -> Result<Self> {
        let n = modes.len();
        Self::new(modes, CMatrix::zeros(n, n))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeParams] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &ModeParams {
        &self.modes[i]
    }

    pub fn mu(&self) -> &CMatrix {
        &self.mu
    }

    pub fn is_reciprocal(&self) -> bool {
        self.reciprocal
    }

    /// H_ii = w_i − i(κ_i − g_i)/2, H_ij = μ_ij.
    pub fn effective_hamiltonian(&self) -> CMatrix {
        let mut h = self.mu.clone();
        for (i, m) in self.modes.iter().enumerate() {
            h[(i, i)] = Complex64::new(m.w0, -0.5 * m.net_loss());
        }
        h
    }

    /// χ(w) = wI − H.
    pub fn chi(&self, w: f64) -> CMatrix {
        let mut chi = -self.effective_hamiltonian();
        for i in 0..self.len() {
            chi[(i, i)] += w;
        }
        chi
    }

    /// max over modes of κ_i + g_i + Σ_j |μ_ij|.
    pub fn rate_scale(&self) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let row: f64 = self.mu.row(i).iter().map(|z| z.norm()).sum();
                m.kappa() + m.g + row
            })
            .fold(0.0, f64::max)
    }

    pub fn stability_threshold(&self) -> f64 {
        STABILITY_REL_EPS * self.rate_scale()
    }

    /// Eigenvalues of −iH and the resulting below-threshold verdict.
    pub fn stability(&self) -> Result<StabilityDiagnosis> {
        let h = self.effective_hamiltonian();
        let schur = nalgebra::linalg::Schur::try_new(h, f64::EPSILON, EIGEN_MAX_ITER)
            .ok_or_else(|| Error::EigenSolver("Schur iteration did not converge".into()))?;
        let eig_h = schur
            .eigenvalues()
            .ok_or_else(|| Error::EigenSolver("Schur form is not triangular".into()))?;
        let minus_i = Complex64::new(0.0, -1.0);
        let eigenvalues: Vec<Complex64> = eig_h.iter().map(|&l| minus_i * l).collect();
        if eigenvalues.iter().any(|l| !(l.re.is_finite() && l.im.is_finite())) {
            return Err(Error::EigenSolver("non-finite eigenvalue".into()));
        }
        let decay_margin = eigenvalues
            .iter()
            .map(|l| -l.re)
            .fold(f64::INFINITY, f64::min);
        let threshold = self.stability_threshold();
        Ok(StabilityDiagnosis {
            eigenvalues,
            below_threshold: decay_margin > threshold,
            decay_margin,
            threshold,
        })
    }

    /// Stability diagnosis, or an [`Error::AboveThreshold`] when the network
    /// has no decaying steady state.
    pub fn require_below_threshold(&self) -> Result<StabilityDiagnosis> {
        let diag = self.stability()?;
        if diag.below_threshold {
            Ok(diag)
        } else {
            Err(Error::AboveThreshold {
                margin: diag.decay_margin,
                threshold: diag.threshold,
            })
        }
    }

    pub fn check_target(&self, target: Target) -> Result<()> {
        let n = self.len();
        match target {
            Target::Frequency(k) if k >= n => Err(Error::IndexOutOfRange(format!(
                "target mode {k} in a {n}-mode network"
            ))),
            Target::Coupling(i, j) if i >= n || j >= n => Err(Error::IndexOutOfRange(format!(
                "coupling pair ({i},{j}) in a {n}-mode network"
            ))),
            Target::Coupling(i, j) if i == j => Err(Error::InvalidArgument(format!(
                "coupling pair needs two distinct modes, got ({i},{j})"
            ))),
            _ => Ok(()),
        }
    }

    /// Copy of the network with the target parameter shifted by `delta`.
    pub fn perturbed(&self, target: Target, delta: f64) -> Result<Self> {
        self.check_target(target)?;
        let mut out = self.clone();
        match target {
            Target::Frequency(k) => out.modes[k].w0 += delta,
            Target::Coupling(i, j) => {
                out.mu[(i, j)] += delta;
                out.mu[(j, i)] += delta;
                out.reciprocal = is_hermitian(&out.mu);
            }
        }
        Ok(out)
    }

    /// Copy with mode `i` replaced.
    pub fn with_mode(&self, i: usize, mode: ModeParams) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange(format!("mode {i}")));
        }
        let mut modes = self.modes.clone();
        modes[i] = mode;
        Self::new(modes, self.mu.clone())
    }

    /// Relabel modes: new mode `a` is old mode `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        let modes = perm.iter().map(|&p| self.modes[p]).collect();
        let mu = CMatrix::from_fn(n, n, |a, b| self.mu[(perm[a], perm[b])]);
        Self::new(modes, mu)
    }
}

fn is_hermitian(mu: &CMatrix) -> bool {
    let scale = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = mu.nrows();
    (0..n).all(|i| {
        (0..n).all(|j| (mu[(i, j)] - mu[(j, i)].conj()).norm() <= RECIPROCITY_TOL * scale)
    })
}

/// Input carrier and per-port mean input amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub w_in: f64,
    a_in: Vec<Complex64>,
}

impl DriveSpec {
    pub fn new(w_in: f64, a_in: Vec<Complex64>) -> Result<Self> {
        if !w_in.is_finite() {
            return Err(Error::InvalidArgument(format!("w_in = {w_in}")));
        }
        if a_in.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite input amplitude".into()));
        }
        if a_in.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::ZeroDrive);
        }
        Ok(Self { w_in, a_in })
    }

    /// Drive a single port of an n-port network with amplitude `amplitude`.
    pub fn single_port(w_in: f64, n: usize, port: usize, amplitude: Complex64) -> Result<Self> {
        if port >= n {
            return Err(Error::IndexOutOfRange(format!("drive port {port} of {n}")));
        }
        let mut a_in = vec![Complex64::new(0.0, 0.0); n];
        a_in[port] = amplitude;
        Self::new(w_in, a_in)
    }

    pub fn a_in(&self) -> &[Complex64] {
        &self.a_in
    }

    /// Same carrier with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.w_in, self.a_in.iter().map(|z| z * factor).collect())
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(self.w_in, perm.iter().map(|&p| self.a_in[p]).collect())
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.a_in.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "drive has {} ports but network has {} modes",
                self.a_in.len(),
                n
            )));
        }
        Ok(())
    }
}

/// Eigenvalues of −iH with the below-threshold verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityDiagnosis {
    pub eigenvalues: Vec<Complex64>,
    pub below_threshold: bool,
    /// min over eigenvalues of −Re λ.
    pub decay_margin: f64,
    /// ε_stab the margin was compared against.
    pub threshold: f64,
}
