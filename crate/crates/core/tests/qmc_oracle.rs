use antibunch::config::RunConfig;
use antibunch::dynamics::lindblad::steady_state_emission_rate;
use antibunch::dynamics::{qmc_trajectory, AtomNumber, OpenSystem, SimConfig};
use antibunch::experiments::simulate_segment;
use antibunch::quantum_core::{basis, PhysicalParams, StateVector};
use antibunch::seeding::derive_seed;
use rayon::prelude::*;

mod common;
use common::{mean_and_se, population_deviation};

#[test]
fn undriven_decay_times_are_exponential() {
    let p = PhysicalParams::single(0.0, 0.0, 1.0);
    let system = OpenSystem::single_atom(&p).unwrap();
    let excited = StateVector::basis_state(2, basis::E).unwrap();
    let horizon = 10.0;
    let n = 10_000u64;
    let mut times: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig::new(1e-3, horizon, derive_seed(11, i), excited).unwrap();
            let traj = qmc_trajectory(&system, &cfg).unwrap();
            assert!(traj.len() <= 1);
            traj.times().first().copied().unwrap_or(f64::INFINITY)
        })
        .collect();
    times.sort_by(f64::total_cmp);

    // Kolmogorov-Smirnov distance to 1 - exp(-t), censored at the horizon.
    let mut d: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        if !t.is_finite() {
            break;
        }
        let cdf = 1.0 - (-t).exp();
        d = d.max((cdf - k as f64 / n as f64).abs());
        d = d.max(((k + 1) as f64 / n as f64 - cdf).abs());
    }
    let critical = 1.63 / (n as f64).sqrt();
    assert!(d < critical, "KS distance {d} exceeds {critical}");
}

#[test]
fn single_atom_rate_matches_steady_state() {
    let p = PhysicalParams::single(1.0, 0.0, 1.0);
    let exact = steady_state_emission_rate(&OpenSystem::single_atom(&p).unwrap()).unwrap();
    assert!((exact - 1.0 / 3.0).abs() < 1e-9);

    let cfg = RunConfig {
        seed: 5,
        ..RunConfig::default()
    };
    let seg = simulate_segment(&p, AtomNumber::One, 2e5, &cfg, "rate", 0).unwrap();
    let rates: Vec<f64> = seg.trajectories.iter().map(|t| t.emission_rate()).collect();
    let (mean, se) = mean_and_se(&rates);
    assert!((mean - exact).abs() < 3.0 * se, "rate {mean} ± {se} vs {exact}");
}

#[test]
fn interacting_pair_rate_matches_steady_state() {
    let p = PhysicalParams {
        omega1: 1.0,
        omega2: 0.6,
        delta: 0.2,
        gamma1: 1.0,
        gamma2: 0.8,
        gamma12: -0.5,
        delta12: 2.0,
    };
    let exact = steady_state_emission_rate(&OpenSystem::pair(&p).unwrap()).unwrap();
    let cfg = RunConfig {
        seed: 6,
        ..RunConfig::default()
    };
    let seg = simulate_segment(&p, AtomNumber::Two, 1e5, &cfg, "rate", 0).unwrap();
    let rates: Vec<f64> = seg.trajectories.iter().map(|t| t.emission_rate()).collect();
    let (mean, se) = mean_and_se(&rates);
    assert!((mean - exact).abs() < 3.0 * se, "rate {mean} ± {se} vs {exact}");
}

#[test]
fn ensemble_populations_follow_master_equation() {
    let p = PhysicalParams {
        omega1: 1.2,
        omega2: 0.8,
        delta: 0.3,
        gamma1: 1.0,
        gamma2: 0.7,
        gamma12: 0.6,
        delta12: 1.5,
    };
    let worst = population_deviation(&p, 2000, 21);
    assert!(worst < 4.0, "populations deviate by {worst} standard errors");
}
