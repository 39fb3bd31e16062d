//! Oracles shared by the integration tests. Nothing here calls into
//! `bosonic_limits::analytic`; the matrices are rebuilt from the raw
//! parameters and solved with a plain LU.

#![allow(dead_code)]

use bosonic_limits::model::{DriveSpec, SensorNetwork, Target};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// χ(w) = wI − H from the raw mode parameters.
pub fn oracle_chi(net: &SensorNetwork, w: f64) -> DMatrix<Complex64> {
    let n = net.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let m = net.mode(i);
            Complex64::new(w - m.w0, 0.5 * (m.kappa_ex + m.kappa_0 - m.g))
        } else {
            -net.mu()[(i, j)]
        }
    })
}

/// Output amplitudes from a direct linear solve.
pub fn oracle_a_out(net: &SensorNetwork, drive: &DriveSpec) -> Vec<Complex64> {
    let chi = oracle_chi(net, drive.w_in);
    let rhs = DVector::from_iterator(
        net.len(),
        (0..net.len()).map(|i| I * net.mode(i).kappa_ex.sqrt() * drive.a_in()[i]),
    );
    let a = chi.lu().solve(&rhs).expect("nonsingular");
    (0..net.len())
        .map(|i| drive.a_in()[i] - net.mode(i).kappa_ex.sqrt() * a[i])
        .collect()
}

/// Central finite difference d a_out / dθ at `port`, step `h`.
pub fn fd_response(
    net: &SensorNetwork,
    drive: &DriveSpec,
    port: usize,
    target: Target,
    h: f64,
) -> Complex64 {
    let up = oracle_a_out(&net.perturbed(target, h).unwrap(), drive);
    let dn = oracle_a_out(&net.perturbed(target, -h).unwrap(), drive);
    (up[port] - dn[port]) / (2.0 * h)
}

/// Output noise pair of one cavity, from its scalar transfer functions
/// t_in = 1 − iκ_ex/χ, t_0 = −i√(κ_ex κ_0)/χ, t_g = −i√(κ_ex g)/χ.
pub fn single_cavity_noise(w0: f64, kappa_ex: f64, kappa_0: f64, g: f64, w: f64) -> (f64, f64) {
    let chi = Complex64::new(w - w0, 0.5 * (kappa_ex + kappa_0 - g));
    let t_in = 1.0 - I * kappa_ex / chi;
    let t_0 = -I * (kappa_ex * kappa_0).sqrt() / chi;
    let t_g = -I * (kappa_ex * g).sqrt() / chi;
    (t_in.norm_sqr() + t_0.norm_sqr(), t_g.norm_sqr())
}

/// Resonant single passive cavity: limit κ/(4√(κ_ex n τ)).
pub fn passive_limit(kappa_ex: f64, kappa_0: f64, n: f64, tau: f64) -> f64 {
    (kappa_ex + kappa_0) / (4.0 * (kappa_ex * n * tau).sqrt())
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
