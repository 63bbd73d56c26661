//! Time evolution of one or two driven, decaying atoms.
//!
//! * [`qmc`]: stochastic quantum-jump trajectories producing photon time stamps.
//! * [`lindblad`]: deterministic master-equation integration, steady states and
//!   the quantum-regression g² oracle.
//! * [`analytic`]: closed-form doubly-excited population of the undamped pair.

pub mod analytic;
pub mod lindblad;
pub mod qmc;

use std::io::{self, Write};

use crate::collective_decay::{decompose, DecayMatrix, JumpBasis};
use crate::error::{Error, Result};
use crate::output::fmt_sig;
use crate::quantum_core::{
    build_effective_hamiltonian, build_pair_hamiltonian, build_single_hamiltonian, sigma_minus,
    OperatorMatrix, PhysicalParams, StateVector,
};

pub use analytic::{analytic_pee, single_excitation_product};
pub use lindblad::{g2_regression, lindblad_integrate, steady_state, DensityMatrix, Detection};
pub use qmc::{qmc_populations, qmc_trajectory, run_ensemble};

/// Number of atoms in a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomNumber {
    One,
    Two,
}

impl AtomNumber {
    pub fn dim(self) -> usize {
        match self {
            AtomNumber::One => 2,
            AtomNumber::Two => 4,
        }
    }
}

/// Hamiltonian plus jump operators for one parameter set.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    params: PhysicalParams,
    atoms: AtomNumber,
    hamiltonian: OperatorMatrix,
    jumps: Vec<OperatorMatrix>,
    decay: Option<JumpBasis>,
}

impl OpenSystem {
    /// One atom driven with `omega1`, detuning `delta`, decay `gamma1`.
    /// The pair-only fields of `p` are ignored.
    pub fn single_atom(p: &PhysicalParams) -> Result<Self> {
        p.validate()?;
        let jump = sigma_minus().scale_real(p.gamma1.sqrt());
        Ok(OpenSystem {
            params: *p,
            atoms: AtomNumber::One,
            hamiltonian: build_single_hamiltonian(p.omega1, p.delta),
            jumps: vec![jump],
            decay: None,
        })
    }

    /// Interacting pair with collective jump operators.
    pub fn pair(p: &PhysicalParams) -> Result<Self> {
        p.validate()?;
        let basis = decompose(&DecayMatrix::new(p.gamma1, p.gamma2, p.gamma12)?)?;
        Ok(OpenSystem {
            params: *p,
            atoms: AtomNumber::Two,
            hamiltonian: build_pair_hamiltonian(p),
            jumps: basis.operators().to_vec(),
            decay: Some(basis),
        })
    }

    pub fn new(p: &PhysicalParams, atoms: AtomNumber) -> Result<Self> {
        match atoms {
            AtomNumber::One => Self::single_atom(p),
            AtomNumber::Two => Self::pair(p),
        }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn atoms(&self) -> AtomNumber {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    /// Jump operators; channel `m` (1-based) is `jumps()[m - 1]`.
    pub fn jumps(&self) -> &[OperatorMatrix] {
        &self.jumps
    }

    pub fn jump_basis(&self) -> Option<&JumpBasis> {
        self.decay.as_ref()
    }

    pub fn effective_hamiltonian(&self) -> OperatorMatrix {
        build_effective_hamiltonian(&self.hamiltonian, &self.jumps)
            .expect("jump operators share the Hamiltonian dimension")
    }

    /// All atoms in the ground state.
    pub fn ground_state(&self) -> StateVector {
        StateVector::ground(self.dim()).expect("dimension is 2 or 4")
    }
}

/// Step size, duration, seed and initial state of one trajectory.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub initial_state: StateVector,
}

impl SimConfig {
    pub fn new(dt: f64, duration: f64, seed: u64, initial_state: StateVector) -> Result<Self> {
        let cfg = SimConfig {
            dt,
            duration,
            seed,
            initial_state: initial_state.normalized(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(Error::param("duration", "must be at least one time step"));
        }
        if self.initial_state.norm_sqr() == 0.0 {
            return Err(Error::param("initial_state", "zero vector"));
        }
        Ok(())
    }

    /// Number of fixed steps covering the duration.
    pub fn steps(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}

/// One detected photon: emission time and jump channel (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEvent {
    pub time: f64,
    pub channel: u8,
}

/// Photon time stamps of one simulated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    events: Vec<PhotonEvent>,
    duration: f64,
    max_jump_probability: f64,
}

impl Trajectory {
    pub fn new(events: Vec<PhotonEvent>, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::param("duration", "must be positive"));
        }
        let mut last = f64::NEG_INFINITY;
        for e in &events {
            if !(e.time >= 0.0 && e.time <= duration) {
                return Err(Error::param("time", format!("{} outside [0, {duration}]", e.time)));
            }
            if e.time <= last {
                return Err(Error::param("time", "time stamps must be strictly increasing"));
            }
            if !(e.channel == 1 || e.channel == 2) {
                return Err(Error::param("channel", format!("{} is not 1 or 2", e.channel)));
            }
            last = e.time;
        }
        Ok(Trajectory {
            events,
            duration,
            max_jump_probability: 0.0,
        })
    }

    pub(crate) fn from_simulation(events: Vec<PhotonEvent>, duration: f64, max_p: f64) -> Self {
        Trajectory {
            events,
            duration,
            max_jump_probability: max_p,
        }
    }

    pub fn events(&self) -> &[PhotonEvent] {
        &self.events
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Photons per unit time.
    pub fn emission_rate(&self) -> f64 {
        self.events.len() as f64 / self.duration
    }

    /// Largest total jump probability seen in any step (0 if not simulated).
    pub fn max_jump_probability(&self) -> f64 {
        self.max_jump_probability
    }

    /// Writes `time,channel` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,channel")?;
        for e in &self.events {
            writeln!(w, "{},{}", fmt_sig(e.time, 12), e.channel)?;
        }
        Ok(())
    }
}
