//! Master-equation integration in the γ_ij form
//!
//! ```text
//! dρ/dt = −i[H, ρ] − Σ_ij γ_ij (½ S_i⁺S_j⁻ ρ + ½ ρ S_i⁺S_j⁻ − S_j⁻ ρ S_i⁺)
//! ```
//!
//! This route uses the raw decay matrix and never touches the collective jump
//! operators, so it serves as an independent check on the trajectory engine.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

use super::{AtomNumber, OpenSystem};
use crate::error::{Error, Result};
use crate::quantum_core::{s1_minus, s2_minus, sigma_minus, OperatorMatrix, StateVector};

/// Largest RK4 sub-step, in units of the inverse reference rate.
const MAX_SUBSTEP: f64 = 0.01;
/// Upper bound on `substep × (‖H‖₁ + Σγ)`.
const MAX_STEP_PHASE: f64 = 0.02;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Residual `max |dρ/dt|` accepted as stationary.
pub const STEADY_STATE_RESIDUAL: f64 = 1e-10;
/// Integration time after which the steady-state search gives up.
pub const STEADY_STATE_T_MAX: f64 = 1e3;

/// Density matrix of one or two atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(OperatorMatrix);

impl DensityMatrix {
    /// Wraps `m` after checking Hermiticity, unit trace and positivity.
    pub fn new(m: OperatorMatrix) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.check(0.0)?;
        Ok(rho)
    }

    pub fn pure(psi: &StateVector) -> Self {
        DensityMatrix(psi.normalized().outer())
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.0[(index, index)].re
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.0)
    }

    fn check(&self, time: f64) -> Result<()> {
        let fail = |what: String| Err(Error::DensityInvariant { time, what });
        let herm = self.0.hermiticity_defect();
        if !(herm <= HERMITICITY_TOL) {
            return fail(format!("hermiticity defect {herm:e}"));
        }
        let tr = self.0.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return fail(format!("trace {tr}"));
        }
        let min = self.min_eigenvalue();
        if !(min > -POSITIVITY_TOL) {
            return fail(format!("minimum eigenvalue {min:e}"));
        }
        Ok(())
    }
}

fn min_hermitian_eigenvalue(m: &OperatorMatrix) -> f64 {
    let n = m.dim();
    let herm = (*m + m.adjoint()).scale_real(0.5);
    let dm = DMatrix::from_fn(n, n, |i, j| {
        let v = herm[(i, j)];
        Complex::new(v.re, v.im)
    });
    dm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Generator of the master equation for one parameter set.
#[derive(Debug, Clone)]
pub(crate) struct Liouvillian {
    h: OperatorMatrix,
    /// `(γ_ij, S_j⁻, S_i⁺)` for every non-zero rate.
    terms: Vec<(f64, OperatorMatrix, OperatorMatrix)>,
    /// `Σ_ij γ_ij S_i⁺S_j⁻`.
    kernel: OperatorMatrix,
    substep: f64,
}

impl Liouvillian {
    pub(crate) fn new(system: &OpenSystem) -> Self {
        let p = system.params();
        let (lowering, rates): (Vec<OperatorMatrix>, Vec<Vec<f64>>) = match system.atoms() {
            AtomNumber::One => (vec![sigma_minus()], vec![vec![p.gamma1]]),
            AtomNumber::Two => (
                vec![s1_minus(), s2_minus()],
                vec![vec![p.gamma1, p.gamma12], vec![p.gamma12, p.gamma2]],
            ),
        };
        let dim = system.dim();
        let mut terms = Vec::new();
        let mut kernel = OperatorMatrix::zeros(dim);
        let mut total_rate = 0.0;
        for (i, row) in rates.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let raise_i = lowering[i].adjoint();
                kernel = kernel + (&raise_i * &lowering[j]).scale_real(g);
                terms.push((g, lowering[j], raise_i));
                total_rate += g.abs();
            }
        }
        let h = *system.hamiltonian();
        let scale = h.norm_one() + total_rate;
        let substep = if scale > 0.0 {
            MAX_SUBSTEP.min(MAX_STEP_PHASE / scale)
        } else {
            MAX_SUBSTEP
        };
        Liouvillian {
            h,
            terms,
            kernel,
            substep,
        }
    }

    /// `Σ_ij γ_ij S_i⁺S_j⁻`: the total emission-rate operator.
    pub(crate) fn emission_operator(&self) -> &OperatorMatrix {
        &self.kernel
    }

    /// `Σ_ij γ_ij S_j⁻ ρ S_i⁺`.
    pub(crate) fn recycle(&self, rho: &OperatorMatrix) -> OperatorMatrix {
        self.terms
            .iter()
            .fold(OperatorMatrix::zeros(rho.dim()), |acc, (g, lower_j, raise_i)| {
                acc + (&(lower_j * rho) * raise_i).scale_real(*g)
            })
    }

    pub(crate) fn apply(&self, rho: &OperatorMatrix) -> OperatorMatrix {
        let hr = &self.h * rho;
        let rh = rho * &self.h;
        let commutator = (hr - rh).scale(Complex64::new(0.0, -1.0));
        let anti = (&self.kernel * rho + rho * &self.kernel).scale_real(-0.5);
        commutator + anti + self.recycle(rho)
    }

    fn rk4(&self, rho: &OperatorMatrix, h: f64) -> OperatorMatrix {
        let k1 = self.apply(rho);
        let k2 = self.apply(&(*rho + k1.scale_real(0.5 * h)));
        let k3 = self.apply(&(*rho + k2.scale_real(0.5 * h)));
        let k4 = self.apply(&(*rho + k3.scale_real(h)));
        *rho + (k1 + k2.scale_real(2.0) + k3.scale_real(2.0) + k4).scale_real(h / 6.0)
    }

    /// Evolves `rho` (not necessarily a density matrix) for `duration`.
    pub(crate) fn evolve(&self, rho: &OperatorMatrix, duration: f64) -> OperatorMatrix {
        if duration <= 0.0 {
            return *rho;
        }
        let n = (duration / self.substep).ceil().max(1.0) as u64;
        let h = duration / n as f64;
        let mut out = *rho;
        for _ in 0..n {
            out = self.rk4(&out, h);
        }
        out
    }
}

/// Integrates the master equation from `rho0` and returns `(t, ρ(t))` at
/// `t = 0, dt, 2dt, …, t_end`. Internally each output interval is split into
/// RK4 sub-steps no longer than `dt`. Every sample is checked for
/// Hermiticity, unit trace and positivity.
pub fn lindblad_integrate(
    rho0: &DensityMatrix,
    system: &OpenSystem,
    dt: f64,
    t_end: f64,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if rho0.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: rho0.dim(),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::param("t_end", "must be non-negative"));
    }
    rho0.check(0.0)?;
    let lv = Liouvillian::new(system);
    let n = (t_end / dt).round() as u64;
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut rho = *rho0;
    out.push((0.0, rho));
    for k in 1..=n {
        let t = k as f64 * dt;
        rho = DensityMatrix(lv.evolve(rho.matrix(), dt));
        rho.check(t)?;
        out.push((t, rho));
    }
    Ok(out)
}

/// Stationary state reached from the all-ground state.
pub fn steady_state(system: &OpenSystem) -> Result<DensityMatrix> {
    let lv = Liouvillian::new(system);
    let mut rho = system.ground_state().outer();
    let chunk = 1.0;
    let mut t = 0.0;
    loop {
        let residual = max_abs(&lv.apply(&rho));
        if residual < STEADY_STATE_RESIDUAL {
            let out = DensityMatrix(rho);
            out.check(t)?;
            return Ok(out);
        }
        if t >= STEADY_STATE_T_MAX {
            return Err(Error::SteadyStateNotConverged {
                t_max: STEADY_STATE_T_MAX,
                residual,
            });
        }
        rho = lv.evolve(&rho, chunk);
        t += chunk;
    }
}

fn max_abs(m: &OperatorMatrix) -> f64 {
    m.entries().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// What the photon detector registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detection {
    /// Every quantum jump is a click, summed over channels. This is exactly
    /// what the trajectory time stamps record: intensity `Σ γ_ij ⟨S_i⁺S_j⁻⟩`
    /// and post-click state `Σ γ_ij S_j⁻ρS_i⁺`.
    #[default]
    JumpChannels,
    /// The coherent sum field `Â⁻ = Σ_j S_j⁻`, which includes interference
    /// between the two atoms' emission.
    SummedField,
}

/// `g²(τ)` in the stationary state from the quantum regression theorem.
///
/// `tau_grid` must be non-negative; it need not be sorted.
pub fn g2_regression(system: &OpenSystem, tau_grid: &[f64], detection: Detection) -> Result<Vec<f64>> {
    if tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::param("tau_grid", "delays must be finite and non-negative"));
    }
    let lv = Liouvillian::new(system);
    let rho = steady_state(system)?;
    let rho = rho.matrix();

    let (intensity_op, conditioned) = match detection {
        Detection::JumpChannels => (*lv.emission_operator(), lv.recycle(rho)),
        Detection::SummedField => {
            let a = match system.atoms() {
                AtomNumber::One => sigma_minus(),
                AtomNumber::Two => s1_minus() + s2_minus(),
            };
            (&a.adjoint() * &a, &(&a * rho) * &a.adjoint())
        }
    };
    let intensity = (&intensity_op * rho).trace().re;
    if intensity <= 0.0 {
        return Err(Error::param("params", "stationary emission rate is zero"));
    }
    let norm = intensity * intensity;

    let mut order: Vec<usize> = (0..tau_grid.len()).collect();
    order.sort_by(|&a, &b| tau_grid[a].total_cmp(&tau_grid[b]));
    let mut out = vec![0.0; tau_grid.len()];
    let mut state = conditioned;
    let mut t = 0.0;
    for idx in order {
        state = lv.evolve(&state, tau_grid[idx] - t);
        t = tau_grid[idx];
        out[idx] = (&intensity_op * &state).trace().re / norm;
    }
    Ok(out)
}

/// Stationary photon emission rate `Σ γ_ij ⟨S_i⁺S_j⁻⟩`.
pub fn steady_state_emission_rate(system: &OpenSystem) -> Result<f64> {
    let lv = Liouvillian::new(system);
    let rho = steady_state(system)?;
    Ok((lv.emission_operator() * rho.matrix()).trace().re)
}
