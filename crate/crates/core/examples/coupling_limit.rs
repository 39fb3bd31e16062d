//! Sensing a change of the coupling between two identical cavities.

use bosonic_limits::analytic;
use bosonic_limits::model::{CMatrix, DriveSpec, ModeParams, SensorNetwork, Target};
use num_complex::Complex64;

fn main() -> bosonic_limits::error::Result<()> {
    let tau = 1e4;
    let mu = 0.3;
    let c = |x: f64| Complex64::new(x, 0.0);
    let net = SensorNetwork::new(
        vec![ModeParams::passive(0.0, 1.0, 1.0); 2],
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(mu), c(mu), c(0.0)]),
    )?;
    let unit = DriveSpec::new(0.0, vec![c(1.0), c(1.0)])?;
    let drive = analytic::normalize_drive(&net, &unit, 0, 100.0)?;
    let ss = analytic::steady_state(&net, &drive)?;
    println!("photons: {:?}", ss.n_photons);
    for port in 0..2 {
        match analytic::sensing_limit(&net, &drive, port, Target::Coupling(0, 1), tau) {
            Ok(r) => println!("port {port}: limit {:.4e}, bound {:.4e}, margin {:.3e}", r.limit, r.bound, r.margin),
            Err(e) => println!("port {port}: {e}"),
        }
    }
    println!(
        "symmetric floor sqrt(kappa_0)/(4 sqrt(n tau)) = {:.4e}",
        analytic::symmetric_coupling_bound(1.0, ss.n_photons[0], tau)?
    );
    Ok(())
}
