//! Single passive cavity: the frequency sensing limit as a function of the
//! external coupling, at fixed intracavity photon number.

use bosonic_limits::analytic;
use bosonic_limits::model::Target;
use bosonic_limits::scenarios::{self, PresetSpec};

fn main() -> bosonic_limits::error::Result<()> {
    let (kappa_0, n, tau) = (1.0, 100.0, 1e4);
    let family = PresetSpec::SinglePassive {
        kappa_0,
        kappa_ex: kappa_0,
        n_target: n,
    };
    let grid = scenarios::logspace(0.1, 10.0, 9);
    println!("{:>10} {:>14} {:>14} {:>14}", "kappa_ex", "limit", "bound", "margin");
    for row in scenarios::sweep(&family, "kappa_ex", &grid, tau, 0, Target::Frequency(0))? {
        if let Some((limit, bound, margin)) = row.report() {
            println!("{:>10.4} {limit:>14.6e} {bound:>14.6e} {margin:>14.3e}", row.value);
        }
    }
    let p = family.build()?;
    let r = analytic::sensing_limit(&p.network, &p.drive, 0, Target::Frequency(0), tau)?;
    println!("critically coupled: limit = {:.6e} (bound {:.6e})", r.limit, r.bound);
    Ok(())
}
