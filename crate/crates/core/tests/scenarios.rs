mod common;

use bosonic_limits::analytic;
use bosonic_limits::cli::config::{self, RunConfig};
use bosonic_limits::error::Error;
use bosonic_limits::model::Target;
use bosonic_limits::scenarios::{self, PresetSpec, SweepOutcome, PRESET_NAMES};
use proptest::prelude::*;

#[test]
fn presets_round_trip_through_config() {
    for name in PRESET_NAMES {
        let spec = PresetSpec::default_for(name).unwrap();
        let cfg = RunConfig {
            preset: Some(spec.clone()),
            ..Default::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        let back = config::load(&text, &[]).unwrap();
        assert_eq!(back.preset.as_ref(), Some(&spec), "{name}:\n{text}");
        assert_eq!(back.preset.unwrap().build().unwrap(), spec.build().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn active_preset_round_trips_any_value(
        k0 in 0.01..10.0f64, kex in 0.01..10.0f64, gf in 0.0..0.99f64, n in 1.0..1e6f64,
    ) {
        let spec = PresetSpec::SingleActive { kappa_0: k0, kappa_ex: kex, g: gf * (k0 + kex), n_target: n };
        let cfg = RunConfig { preset: Some(spec.clone()), ..Default::default() };
        let back = config::load(&toml::to_string(&cfg).unwrap(), &[]).unwrap();
        prop_assert_eq!(back.preset, Some(spec));
    }
}

#[test]
fn preset_examples() {
    let p = scenarios::preset("single_passive").unwrap();
    let ss = analytic::steady_state(&p.network, &p.drive).unwrap();
    assert!(common::rel_err(ss.n_photons[0], 100.0) <= 1e-12);
    // n = 4κ_ex|a_in|²/κ² at resonance
    let a_in = p.drive.a_in()[0].norm();
    assert!(common::rel_err(4.0 * a_in * a_in / 4.0, 100.0) <= 1e-12);

    assert!(!scenarios::preset("two_mode_nonreciprocal").unwrap().network.is_reciprocal());

    let chain = scenarios::preset("chain").unwrap();
    assert_eq!(chain.network.len(), 4);
    for i in 0..4 {
        for j in 0..4 {
            let mu = chain.network.mu()[(i, j)];
            assert_eq!(mu.im, 0.0);
            assert_eq!(mu.re != 0.0, i.abs_diff(j) == 1);
        }
    }
    assert!(chain.drive.a_in()[0].norm() > 0.0);
    assert!(chain.drive.a_in()[1..].iter().all(|z| z.norm() == 0.0));

    assert!(matches!(scenarios::preset("nope"), Err(Error::UnknownPreset(_))));
    let bad = PresetSpec::default_for("two_mode_ep").unwrap().with_parameter("epsilon", -0.1).unwrap();
    assert!(bad.build().is_err());
}

#[test]
fn passive_sweep_margin_vanishes_only_at_kappa_0() {
    let family = PresetSpec::default_for("single_passive").unwrap();
    let mut grid = scenarios::logspace(0.05, 20.0, 41);
    grid.push(1.0);
    let rows = scenarios::sweep(&family, "kappa_ex", &grid, 1e4, 0, Target::Frequency(0)).unwrap();
    for r in rows {
        let (limit, bound, margin) = r.report().unwrap();
        assert!(common::rel_err(limit, common::passive_limit(r.value, 1.0, 100.0, 1e4)) <= 1e-9);
        if r.value == 1.0 {
            assert!(margin.abs() <= 1e-12 * bound);
        } else {
            assert!(margin > 0.0, "kappa_ex = {}", r.value);
        }
    }
}

#[test]
fn gain_sweep_never_beats_gain_bound() {
    let family = PresetSpec::default_for("single_active").unwrap();
    // κ = 2, so g ∈ [0, 0.9κ]
    let grid = scenarios::linspace(0.0, 1.8, 37);
    let rows = scenarios::sweep(&family, "g", &grid, 1e4, 0, Target::Frequency(0)).unwrap();
    let floor = 1.0 / (2.0 * (100.0f64 * 1e4).sqrt());
    for r in rows {
        let (limit, bound, margin) = r.report().unwrap();
        let oracle = (1.0 + r.value).sqrt() * floor;
        assert!(common::rel_err(analytic::gain_bound(1.0, r.value, 100.0, 1e4).unwrap(), oracle) <= 1e-12);
        assert!(limit >= oracle * (1.0 - 1e-9), "g = {}", r.value);
        assert!(common::rel_err(bound, floor) <= 1e-12);
        assert!(margin >= -1e-9 * bound);
    }
}

#[test]
fn ep_response_grows_towards_the_exceptional_point() {
    let family = PresetSpec::default_for("two_mode_ep").unwrap();
    let grid = scenarios::logspace(1e-1, 1e-6, 11);
    let rows = scenarios::sweep(&family, "epsilon", &grid, 1e4, 0, Target::Frequency(0)).unwrap();
    let mut last = 0.0;
    for r in &rows {
        match r.outcome {
            SweepOutcome::Ok { response_mag, margin, bound, .. } => {
                assert!(response_mag > last, "epsilon = {}", r.value);
                assert!(margin >= -1e-9 * bound);
                last = response_mag;
            }
            SweepOutcome::Skipped { ref reason } => panic!("epsilon = {}: {reason}", r.value),
        }
    }

    // the eigenvalue splitting itself reacts ever more strongly to a
    // resonance shift: |d(λ1 − λ2)/dw| ~ 1/√ε
    let splitting_slope = |eps: f64| {
        let net = family.with_parameter("epsilon", eps).unwrap().build().unwrap().network;
        let split = |d: f64| {
            let ev = net.perturbed(Target::Frequency(1), d).unwrap().stability().unwrap().eigenvalues;
            // fixed branch: the splitting is near-real on this side of the EP
            let s = ev[0] - ev[1];
            if s.re < 0.0 { -s } else { s }
        };
        let h = 1e-3 * eps;
        (split(h) - split(-h)).norm() / (2.0 * h)
    };
    let slopes: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&e| splitting_slope(e)).collect();
    assert!(slopes[1] > 2.0 * slopes[0] && slopes[2] > 2.0 * slopes[1], "{slopes:?}");
}

#[test]
fn unstable_points_are_skipped_not_fatal() {
    let family = PresetSpec::default_for("single_active").unwrap();
    let rows = scenarios::sweep(&family, "g", &[0.5, 2.5, 3.0], 1e4, 0, Target::Frequency(0)).unwrap();
    assert!(rows[0].report().is_some());
    for r in &rows[1..] {
        assert!(matches!(r.outcome, SweepOutcome::Skipped { .. }));
    }
    assert!(scenarios::sweep(&family, "bogus", &[1.0], 1e4, 0, Target::Frequency(0)).is_err());
    assert!(matches!(
        scenarios::sweep(&family, "g", &[], 1e4, 0, Target::Frequency(0)),
        Err(Error::EmptyGrid)
    ));
}
