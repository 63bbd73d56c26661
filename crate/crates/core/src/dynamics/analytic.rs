//! Undamped pair on resonance (`Δ = 0`, `Ω₁ = Ω₂ = Ω`) starting in `|gg⟩`.
//!
//! In the symmetric subspace the Hamiltonian has eigenvalues `0` and
//! `(δ₁₂ ± A)/2` with `A = √(δ₁₂² + 4Ω²)`. The doubly-excited amplitude is
//!
//! ```text
//! ⟨ee|Ψ(t)⟩ = −½ + (Ω²/4) [ (3δ₁₂ − A)/B · e^{i(δ₁₂−A)t/2} + (3δ₁₂ + A)/C · e^{i(δ₁₂+A)t/2} ]
//! B = ½(δ₁₂ − A)³ − (δ₁₂² + Ω²)(δ₁₂ − A) − δ₁₂Ω²
//! C = ½(δ₁₂ + A)³ − (δ₁₂² + Ω²)(δ₁₂ + A) − δ₁₂Ω²
//! ```
//!
//! The constant `−½` is the projection through the zero-energy eigenvector
//! `(|gg⟩ − |ee⟩)/√2`; without it the amplitude would not vanish at `t = 0`.
//! The overall phase convention is irrelevant for `|⟨ee|Ψ(t)⟩|²`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum_core::{basis, build_pair_hamiltonian, matrix_exponential, PhysicalParams, StateVector};

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::param("omega", "must be positive"))
    }
}

/// `⟨ee|Ψ(t)⟩` from the closed form.
pub fn doubly_excited_amplitude(omega: f64, delta12: f64, t: f64) -> Result<Complex64> {
    check_omega(omega)?;
    let d = delta12;
    let w2 = omega * omega;
    let a = (d * d + 4.0 * w2).sqrt();
    let lo = d - a;
    let hi = d + a;
    let b = 0.5 * lo.powi(3) - (d * d + w2) * lo - d * w2;
    let c = 0.5 * hi.powi(3) - (d * d + w2) * hi - d * w2;
    let phase = |x: f64| Complex64::new(0.0, x * t / 2.0).exp();
    let amp = (w2 / 4.0) * ((3.0 * d - a) / b * phase(lo) + (3.0 * d + a) / c * phase(hi));
    Ok(amp - 0.5)
}

/// `P_ee(t) = |⟨ee|Ψ(t)⟩|²` from the closed form.
pub fn analytic_pee(omega: f64, delta12: f64, t: f64) -> Result<f64> {
    Ok(doubly_excited_amplitude(omega, delta12, t)?.norm_sqr())
}

/// State of the undamped resonant pair at time `t`, by matrix exponential.
pub fn pair_state(omega: f64, delta12: f64, t: f64) -> Result<StateVector> {
    check_omega(omega)?;
    let h = build_pair_hamiltonian(&PhysicalParams::symmetric_pair(omega, 0.0, 0.0, 0.0, delta12));
    Ok(matrix_exponential(&h, t).apply(&StateVector::ground(4)?))
}

/// `P₁(t)·P₂(t)`, the product of the probabilities that atom 1 resp. atom 2
/// is excited irrespective of the other.
pub fn single_excitation_product(omega: f64, delta12: f64, t: f64) -> Result<f64> {
    let psi = pair_state(omega, delta12, t)?;
    let p1 = psi.population(basis::EG) + psi.population(basis::EE);
    let p2 = psi.population(basis::GE) + psi.population(basis::EE);
    Ok(p1 * p2)
}

/// A local maximum of `P_ee` counts as a peak once it reaches this fraction of
/// the largest value in the window. Coupling superimposes small fast ripples
/// on the slow double-excitation envelope; those are not peaks.
pub const MAJOR_PEAK_FRACTION: f64 = 0.5;

/// Time of the first major local maximum of `P_ee` on a uniform grid of
/// spacing `step` up to `t_max`.
pub fn first_pee_maximum(omega: f64, delta12: f64, step: f64, t_max: f64) -> Result<Option<f64>> {
    check_omega(omega)?;
    if !(step.is_finite() && step > 0.0 && t_max.is_finite() && t_max > step) {
        return Err(Error::param("step", "need 0 < step < t_max"));
    }
    let n = (t_max / step).floor() as usize;
    let values = (0..=n)
        .map(|k| analytic_pee(omega, delta12, k as f64 * step))
        .collect::<Result<Vec<f64>>>()?;
    let peak = values.iter().copied().fold(0.0, f64::max);
    let threshold = MAJOR_PEAK_FRACTION * peak;
    Ok(values
        .windows(3)
        .position(|w| w[1] > w[0] && w[1] >= w[2] && w[1] >= threshold)
        .map(|k| (k + 1) as f64 * step))
}
