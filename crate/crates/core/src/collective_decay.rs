//! Collective jump operators obtained by diagonalising the 2×2 decay matrix
//! `[[γ₁, γ₁₂], [γ₁₂, γ₂]]`.

use crate::error::{Error, Result};
use crate::quantum_core::{s1_minus, s2_minus, OperatorMatrix, StateVector};

/// Relative slack allowed in `γ₁₂² ≤ γ₁γ₂` before a decay matrix is rejected.
pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Relative threshold (to `γ̄`) below which `γ₁₂` and `Δ_γ` count as zero.
const DEGENERACY_GUARD: f64 = 1e-12;

/// Decay rates of the two atoms and their cross-damping term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayMatrix {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma12: f64,
}

impl DecayMatrix {
    pub fn new(gamma1: f64, gamma2: f64, gamma12: f64) -> Result<Self> {
        let d = DecayMatrix {
            gamma1,
            gamma2,
            gamma12,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1.is_finite() && self.gamma2.is_finite() && self.gamma12.is_finite()) {
            return Err(Error::param("gamma", "decay rates must be finite"));
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::param("gamma", "single-atom decay rates must be non-negative"));
        }
        let product = self.gamma1 * self.gamma2;
        let gamma12_sq = self.gamma12 * self.gamma12;
        if gamma12_sq > product * (1.0 + PSD_RELATIVE_TOLERANCE) {
            return Err(Error::UnphysicalDecay {
                product,
                gamma12_sq,
            });
        }
        Ok(())
    }

    /// `Σ_ij γ_ij S_i⁺ S_j⁻` on the pair space.
    pub fn dissipator_kernel(&self) -> OperatorMatrix {
        let s = [s1_minus(), s2_minus()];
        let g = [[self.gamma1, self.gamma12], [self.gamma12, self.gamma2]];
        let mut out = OperatorMatrix::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                out = out + (&s[i].adjoint() * &s[j]).scale_real(g[i][j]);
            }
        }
        out
    }
}

/// Eigen-decomposition of a [`DecayMatrix`] and the resulting jump operators
/// `L₁ = √Λ₁(αS₁⁻ + βS₂⁻)`, `L₂ = √Λ₂(−βS₁⁻ + αS₂⁻)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpBasis {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub l1: OperatorMatrix,
    pub l2: OperatorMatrix,
}

impl JumpBasis {
    pub fn operators(&self) -> [OperatorMatrix; 2] {
        [self.l1, self.l2]
    }
}

/// Diagonalises the decay matrix.
///
/// Eigenvalues are `γ̄ ± √(γ₁₂² + Δ_γ²)`. The eigenvector of `Λ₁` is taken
/// as `(Δ_γ + s, γ₁₂)` normalised, where `s = √(γ₁₂² + Δ_γ²)`, so that `β`
/// carries the sign of `γ₁₂`. For `Δ_γ < 0` the parallel form
/// `sign(γ₁₂)·(|γ₁₂|, s − Δ_γ)` is used instead to avoid cancellation; at
/// `γ₁₂ = 0` it yields `α = 0, β = 1`. If both `γ₁₂` and `Δ_γ` vanish the
/// channels are taken as the independent single-atom ones, `α = 1, β = 0`.
pub fn decompose(d: &DecayMatrix) -> Result<JumpBasis> {
    d.validate()?;
    let mean = 0.5 * (d.gamma1 + d.gamma2);
    let half_diff = 0.5 * (d.gamma1 - d.gamma2);
    let g12 = d.gamma12;
    let split = g12.hypot(half_diff);

    let lambda1 = mean + split;
    // Rounding can push the subradiant rate a hair below zero when the decay
    // matrix is at the edge of positivity.
    let lambda2 = (mean - split).max(0.0);

    let guard = DEGENERACY_GUARD * mean;
    let (alpha, beta) = if g12.abs() <= guard && half_diff.abs() <= guard {
        (1.0, 0.0)
    } else if half_diff >= 0.0 {
        let a = half_diff + split;
        let norm = g12.hypot(a);
        (a / norm, g12 / norm)
    } else {
        let b = split - half_diff;
        let norm = g12.hypot(b);
        let sign = if g12 < 0.0 { -1.0 } else { 1.0 };
        (g12.abs() / norm, sign * b / norm)
    };

    let s1 = s1_minus();
    let s2 = s2_minus();
    let l1 = (s1.scale_real(alpha) + s2.scale_real(beta)).scale_real(lambda1.sqrt());
    let l2 = (s1.scale_real(-beta) + s2.scale_real(alpha)).scale_real(lambda2.sqrt());

    Ok(JumpBasis {
        lambda1,
        lambda2,
        alpha,
        beta,
        l1,
        l2,
    })
}

/// `p_m = ⟨ψ|L_m†L_m|ψ⟩ dt` for both channels.
pub fn jump_probabilities(psi: &StateVector, basis: &JumpBasis, dt: f64) -> (f64, f64) {
    let p = |l: &OperatorMatrix| l.apply(psi).norm_sqr() * dt;
    (p(&basis.l1), p(&basis.l2))
}

/// `Σ_m L_m†L_m`.
pub fn jump_kernel(basis: &JumpBasis) -> OperatorMatrix {
    basis
        .operators()
        .iter()
        .fold(OperatorMatrix::zeros(4), |acc, l| acc + &l.adjoint() * l)
}
