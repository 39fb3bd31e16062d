//! Randomized check of the n-mode frequency and coupling bounds.

use bosonic_limits::suite::{self, TargetKind};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    for kind in [TargetKind::Frequency, TargetKind::Coupling] {
        let s = suite::run_bound_suite(seed, 500, 8, kind);
        println!(
            "{}: {}/{} within bound, min (limit - bound)/bound = {:.4e}",
            s.suite, s.passed, s.instances, s.min_rel_margin
        );
        let tightest = s
            .records
            .iter()
            .min_by(|a, b| a.rel_margin.total_cmp(&b.rel_margin))
            .expect("suite is non-empty");
        println!("  tightest: {tightest:?}");
    }
}
