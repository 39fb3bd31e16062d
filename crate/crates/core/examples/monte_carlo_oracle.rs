//! Langevin trajectories versus the closed-form output noise for every
//! preset.

use bosonic_limits::analytic::{self, AVERAGING_DECAY_TIMES};
use bosonic_limits::scenarios::{self, PRESET_NAMES};
use bosonic_limits::stochastic::{self, SimConfig};

fn main() -> bosonic_limits::error::Result<()> {
    let n_traj = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    for name in PRESET_NAMES {
        let p = scenarios::preset(name)?;
        let margin = p.network.stability()?.decay_margin;
        let tau = AVERAGING_DECAY_TIMES / margin;
        let cfg = SimConfig::for_network(&p.network, tau, 4, n_traj, 7)?;
        let ens = stochastic::simulate(&p.network, &p.drive, &cfg, None)?;
        let est = stochastic::homodyne_estimate(&ens, 0, 0.0, tau)?;
        let expected = analytic::output_noise_pair(&p.network, 0, p.drive.w_in)?.total() / tau;
        println!(
            "{name:>24}: variance {:.5e} ± {:.1e}, analytic {expected:.5e}, z = {:+.2}",
            est.variance,
            est.stderr_of_variance,
            (est.variance - expected) / est.stderr_of_variance
        );
    }
    Ok(())
}
