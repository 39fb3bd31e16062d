//! Above threshold: frequency estimation from a diffusing phase, compared
//! with the linear-sensor floor.

use bosonic_limits::analytic;
use bosonic_limits::stochastic;

fn main() -> bosonic_limits::error::Result<()> {
    let (kappa, n) = (1.0, 100.0);
    println!("{:>8} {:>12} {:>12} {:>12} {:>8}", "tau", "var_phase", "freq_std", "linear", "ratio");
    for tau in [50.0, 200.0, 800.0] {
        let r = stochastic::phase_diffusion(kappa, 0.0, n, tau, 10_000, 1)?;
        let linear = analytic::fundamental_bound(kappa, n, tau)?;
        println!(
            "{tau:>8} {:>12.4} {:>12.4e} {linear:>12.4e} {:>8.4}",
            r.var_phase,
            r.freq_std,
            r.freq_std / linear
        );
    }
    println!("expected ratio sqrt(2) = {:.4}", 2f64.sqrt());
    Ok(())
}
