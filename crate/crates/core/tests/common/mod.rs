use antibunch::dynamics::{lindblad_integrate, qmc_populations, DensityMatrix, OpenSystem, SimConfig};
use antibunch::quantum_core::{PhysicalParams, StateVector};
use antibunch::seeding::derive_seed;
use rayon::prelude::*;

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Largest deviation, in standard errors, between ensemble-averaged QMC
/// populations of a pair and the master equation over `t ∈ [0, 4]`.
pub fn population_deviation(p: &PhysicalParams, trajectories: u64, seed: u64) -> f64 {
    let system = OpenSystem::pair(p).unwrap();
    let (dt, duration, every) = (1e-3, 4.0, 250u64);
    let samples: Vec<Vec<StateVector>> = (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig::new(dt, duration, derive_seed(seed, i), system.ground_state()).unwrap();
            qmc_populations(&system, &cfg, every).unwrap().1
        })
        .collect();
    let rho0 = DensityMatrix::pure(&system.ground_state());
    let exact = lindblad_integrate(&rho0, &system, every as f64 * dt, duration).unwrap();
    assert_eq!(exact.len(), samples[0].len());

    let mut worst: f64 = 0.0;
    for (k, (_, rho)) in exact.iter().enumerate() {
        for level in 0..4 {
            let xs: Vec<f64> = samples.iter().map(|s| s[k].population(level)).collect();
            let (mean, se) = mean_and_se(&xs);
            let diff = (mean - rho.population(level)).abs();
            if diff > 1e-12 {
                worst = worst.max(diff / se);
            }
        }
    }
    worst
}
