//! Cavity with gain: output noise on both sides of the spectrum and the
//! gain-dependent sensing floor.

use bosonic_limits::analytic;
use bosonic_limits::model::{ModeParams, SensorNetwork, Target};
use bosonic_limits::scenarios::PresetSpec;

fn main() -> bosonic_limits::error::Result<()> {
    let (kappa_0, kappa_ex, n, tau) = (1.0, 1.0, 100.0, 1e4);
    println!("{:>6} {:>10} {:>10} {:>12} {:>12} {:>12}", "g", "s_plus", "s_minus", "limit", "gain_bound", "fund_bound");
    for g in [0.0, 0.3, 0.6, 1.0, 1.5, 1.8] {
        let net = SensorNetwork::uncoupled(vec![ModeParams::new(0.0, kappa_ex, kappa_0, g)])?;
        let noise = analytic::output_noise_pair(&net, 0, 0.0)?;
        let p = PresetSpec::SingleActive { kappa_0, kappa_ex, g, n_target: n }.build()?;
        let r = analytic::sensing_limit(&p.network, &p.drive, 0, Target::Frequency(0), tau)?;
        println!(
            "{g:>6.2} {:>10.4} {:>10.4} {:>12.4e} {:>12.4e} {:>12.4e}",
            noise.s_plus,
            noise.s_minus,
            r.limit,
            analytic::gain_bound(kappa_0, g, n, tau)?,
            r.bound
        );
    }
    Ok(())
}
