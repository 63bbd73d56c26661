//! Fixed-step quantum-jump Monte Carlo.
//!
//! Each step draws one uniform `r ∈ [0, 1)`. With `p_m = ⟨ψ|L_m†L_m|ψ⟩ dt`
//! and `p₀ = 1 − p₁ − p₂`, the step is a no-jump evolution
//! `ψ → exp(−iH_eff dt)ψ / ‖·‖` if `r < p₀`, otherwise the jump `L_m` with the
//! smallest `m` such that `p₀ + … + p_m > r` is applied and `ψ → L_mψ / ‖·‖`.
//! A photon is time-stamped with the start time of the step in which it fires.

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{OpenSystem, PhotonEvent, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::quantum_core::{matrix_exponential, OperatorMatrix, StateVector};
use crate::seeding::{derive_seed, rng_from_seed};

/// Total jump probability per step above which the run is aborted.
pub const MAX_STEP_PROBABILITY: f64 = 0.2;
/// Total jump probability per step above which a warning is logged.
pub const WARN_STEP_PROBABILITY: f64 = 0.05;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy)]
struct SparseOp {
    entries: [(usize, usize, Complex64); 16],
    len: usize,
}

impl SparseOp {
    fn from_dense(m: &OperatorMatrix) -> Self {
        let mut entries = [(0, 0, ZERO); 16];
        let mut len = 0;
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries[len] = (i, j, v);
                    len += 1;
                }
            }
        }
        SparseOp { entries, len }
    }
}

struct Kernel<const N: usize> {
    propagator: [[Complex64; N]; N],
    jumps: [SparseOp; 2],
    channels: usize,
    dt: f64,
}

enum StepOutcome {
    Evolved,
    Jumped(u8),
}

impl<const N: usize> Kernel<N> {
    fn new(system: &OpenSystem, dt: f64) -> Self {
        debug_assert_eq!(system.dim(), N);
        let u = matrix_exponential(&system.effective_hamiltonian(), dt);
        let mut propagator = [[ZERO; N]; N];
        for (i, row) in propagator.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = u[(i, j)];
            }
        }
        let empty = SparseOp::from_dense(&OperatorMatrix::zeros(N));
        let mut jumps = [empty; 2];
        for (slot, l) in jumps.iter_mut().zip(system.jumps()) {
            *slot = SparseOp::from_dense(l);
        }
        Kernel {
            propagator,
            jumps,
            channels: system.jumps().len().min(2),
            dt,
        }
    }

    /// Advances `psi` by one step. Returns the total jump probability of the
    /// step and what happened.
    #[inline]
    fn step(&self, psi: &mut [Complex64; N], r: f64) -> (f64, StepOutcome) {
        let mut jumped = [[ZERO; N]; 2];
        let mut p = [0.0f64; 2];
        for m in 0..self.channels {
            let op = &self.jumps[m];
            for &(i, j, v) in &op.entries[..op.len] {
                jumped[m][i] += v * psi[j];
            }
            p[m] = jumped[m].iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dt;
        }
        let total = p[0] + p[1];
        let p0 = 1.0 - total;

        if r < p0 {
            let mut next = [ZERO; N];
            for (i, out) in next.iter_mut().enumerate() {
                let row = &self.propagator[i];
                let mut acc = ZERO;
                for j in 0..N {
                    acc += row[j] * psi[j];
                }
                *out = acc;
            }
            normalize_into(psi, &next);
            (total, StepOutcome::Evolved)
        } else {
            let m = if r < p0 + p[0] { 0 } else { 1 };
            normalize_into(psi, &jumped[m]);
            (total, StepOutcome::Jumped(m as u8 + 1))
        }
    }
}

#[inline]
fn normalize_into<const N: usize>(psi: &mut [Complex64; N], v: &[Complex64; N]) {
    let inv = 1.0 / v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for (o, x) in psi.iter_mut().zip(v) {
        *o = x * inv;
    }
}

fn run<const N: usize>(
    system: &OpenSystem,
    cfg: &SimConfig,
    mut observe: impl FnMut(u64, &[Complex64; N]),
) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.initial_state.dim() != N {
        return Err(Error::DimensionMismatch {
            expected: N,
            found: cfg.initial_state.dim(),
        });
    }
    let kernel = Kernel::<N>::new(system, cfg.dt);
    let mut rng = rng_from_seed(cfg.seed);

    let mut psi = [ZERO; N];
    let init = cfg.initial_state.normalized();
    psi.copy_from_slice(init.amplitudes());

    let steps = cfg.steps();
    let mut events = Vec::new();
    let mut max_p = 0.0f64;
    for s in 0..steps {
        observe(s, &psi);
        let r: f64 = rng.random();
        let (p, outcome) = kernel.step(&mut psi, r);
        if p > max_p {
            max_p = p;
            if p > MAX_STEP_PROBABILITY {
                return Err(Error::StepTooLarge {
                    probability: p,
                    limit: MAX_STEP_PROBABILITY,
                    time: s as f64 * cfg.dt,
                });
            }
        }
        if let StepOutcome::Jumped(channel) = outcome {
            events.push(PhotonEvent {
                time: s as f64 * cfg.dt,
                channel,
            });
        }
    }
    observe(steps, &psi);

    if max_p > WARN_STEP_PROBABILITY {
        warn!(
            "jump probability per step reached {max_p:.3} (> {WARN_STEP_PROBABILITY}); consider a smaller dt"
        );
    }
    Ok(Trajectory::from_simulation(events, steps as f64 * cfg.dt, max_p))
}

/// Simulates one quantum-jump trajectory. The dimension of
/// `cfg.initial_state` must match the system (2 for one atom, 4 for a pair).
pub fn qmc_trajectory(system: &OpenSystem, cfg: &SimConfig) -> Result<Trajectory> {
    match system.dim() {
        2 => run::<2>(system, cfg, |_, _| {}),
        4 => run::<4>(system, cfg, |_, _| {}),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Simulates one trajectory and records the state every `sample_every` steps,
/// starting with the initial state and ending with the final one.
pub fn qmc_populations(
    system: &OpenSystem,
    cfg: &SimConfig,
    sample_every: u64,
) -> Result<(Trajectory, Vec<StateVector>)> {
    if sample_every == 0 {
        return Err(Error::param("sample_every", "must be positive"));
    }
    let mut samples = Vec::new();
    let steps = cfg.steps();
    let traj = match system.dim() {
        2 => run::<2>(system, cfg, |s, psi| {
            if s % sample_every == 0 || s == steps {
                samples.push(StateVector::new(psi).expect("finite state"));
            }
        })?,
        4 => run::<4>(system, cfg, |s, psi| {
            if s % sample_every == 0 || s == steps {
                samples.push(StateVector::new(psi).expect("finite state"));
            }
        })?,
        d => return Err(Error::UnsupportedDimension(d)),
    };
    Ok((traj, samples))
}

/// Runs `count` independent trajectories in parallel. Trajectory `i` uses the
/// seed `derive_seed(master_seed, first_index + i)`; the output order is the
/// index order regardless of scheduling.
pub fn run_ensemble(
    system: &OpenSystem,
    template: &SimConfig,
    count: usize,
    master_seed: u64,
    first_index: u64,
) -> Result<Vec<Trajectory>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                seed: derive_seed(master_seed, first_index + i),
                ..*template
            };
            qmc_trajectory(system, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::AtomNumber;
    use crate::quantum_core::{basis, PhysicalParams};

    fn single(omega: f64) -> OpenSystem {
        OpenSystem::single_atom(&PhysicalParams::single(omega, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn ground_state_without_drive_never_emits() {
        let sys = single(0.0);
        let cfg = SimConfig::new(1e-3, 50.0, 3, sys.ground_state()).unwrap();
        assert!(qmc_trajectory(&sys, &cfg).unwrap().is_empty());
    }

    #[test]
    fn excited_state_without_drive_emits_once() {
        let sys = single(0.0);
        let e = StateVector::basis_state(2, basis::E).unwrap();
        for seed in 0..20 {
            let cfg = SimConfig::new(1e-3, 40.0, seed, e).unwrap();
            let t = qmc_trajectory(&sys, &cfg).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t.events()[0].channel, 1);
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let p = PhysicalParams {
            omega1: 1.0,
            omega2: 0.8,
            delta: 0.2,
            gamma1: 1.0,
            gamma2: 0.7,
            gamma12: 0.4,
            delta12: 3.0,
        };
        let sys = OpenSystem::new(&p, AtomNumber::Two).unwrap();
        let cfg = SimConfig::new(1e-3, 200.0, 11, sys.ground_state()).unwrap();
        let a = qmc_trajectory(&sys, &cfg).unwrap();
        let b = qmc_trajectory(&sys, &cfg).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let c = qmc_trajectory(&sys, &SimConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn norm_is_preserved_every_step() {
        let p = PhysicalParams::symmetric_pair(1.3, 0.4, 1.0, -0.6, 4.0);
        let sys = OpenSystem::pair(&p).unwrap();
        let cfg = SimConfig::new(1e-3, 30.0, 5, sys.ground_state()).unwrap();
        let (traj, states) = qmc_populations(&sys, &cfg, 1).unwrap();
        assert!(!traj.is_empty());
        assert_eq!(states.len() as u64, cfg.steps() + 1);
        for s in &states {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let sys = single(0.0);
        let e = StateVector::basis_state(2, basis::E).unwrap();
        let cfg = SimConfig::new(0.5, 10.0, 1, e).unwrap();
        assert!(matches!(
            qmc_trajectory(&sys, &cfg),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let sys = single(1.0);
        let cfg = SimConfig::new(1e-3, 1.0, 1, StateVector::ground(4).unwrap()).unwrap();
        assert!(qmc_trajectory(&sys, &cfg).is_err());
    }

    #[test]
    fn ensemble_is_schedule_independent() {
        let sys = single(1.0);
        let cfg = SimConfig::new(1e-3, 100.0, 0, sys.ground_state()).unwrap();
        let all = run_ensemble(&sys, &cfg, 6, 99, 0).unwrap();
        let tail = run_ensemble(&sys, &cfg, 3, 99, 3).unwrap();
        assert_eq!(&all[3..], &tail[..]);
        let single_run = qmc_trajectory(&sys, &SimConfig { seed: derive_seed(99, 4), ..cfg }).unwrap();
        assert_eq!(all[4], single_run);
    }
}
