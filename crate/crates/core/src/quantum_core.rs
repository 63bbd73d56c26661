//! Dense complex linear algebra for one and two two-level atoms.
//!
//! All matrices are at most 4×4, so they live on the stack. The two-atom basis
//! is ordered `(gg, ge, eg, ee)` where the left label is atom 1; the one-atom
//! basis is `(g, e)`. Frequencies are angular and measured in units of a
//! reference decay rate, with ħ = 1.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex probability amplitude.
pub type ComplexAmplitude = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Basis indices.
pub mod basis {
    pub const G: usize = 0;
    pub const E: usize = 1;

    pub const GG: usize = 0;
    pub const GE: usize = 1;
    pub const EG: usize = 2;
    pub const EE: usize = 3;
}

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// State of one (dim 2) or two (dim 4) atoms.
#[derive(Clone, Copy, PartialEq)]
pub struct StateVector {
    dim: usize,
    amps: [Complex64; 4],
}

impl StateVector {
    pub fn new(amplitudes: &[Complex64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::param("amplitudes", "non-finite amplitude"));
        }
        let mut amps = [ZERO; 4];
        amps[..amplitudes.len()].copy_from_slice(amplitudes);
        Ok(StateVector {
            dim: amplitudes.len(),
            amps,
        })
    }

    /// Basis state `index` of a `dim`-dimensional space.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::param("index", format!("{index} out of range for dim {dim}")));
        }
        let mut amps = [ZERO; 4];
        amps[index] = ONE;
        Ok(StateVector { dim, amps })
    }

    /// All atoms in the ground state.
    pub fn ground(dim: usize) -> Result<Self> {
        Self::basis_state(dim, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps[..self.dim]
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes()[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit-norm copy. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return *self;
        }
        let mut out = *self;
        for c in &mut out.amps[..self.dim] {
            *c /= n;
        }
        out
    }

    /// Probability of finding the system in basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.amplitude(index).norm_sqr()
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn outer(&self) -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        m
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amplitudes()).finish()
    }
}

/// Dense square complex matrix of dimension 2 or 4, stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    data: [Complex64; 16],
}

impl OperatorMatrix {
    /// Zero matrix.
    ///
    /// # Panics
    /// If `dim` is larger than 4.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= 4, "operator dimension {dim} exceeds 4");
        OperatorMatrix {
            dim,
            data: [ZERO; 16],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Builds a matrix from real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        let refs: Vec<&[Complex64]> = complex.iter().map(|r| r.as_slice()).collect();
        Self::from_rows(&refs)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        check_dim(entries.len())?;
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = *self;
        for v in &mut m.data[..self.dim * self.dim] {
            *v *= s;
        }
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data[..self.dim * self.dim]
            .iter()
            .zip(&other.data[..self.dim * self.dim])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        assert_eq!(self.dim, psi.dim, "operator/state dimension mismatch");
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self[(i, j)] * psi.amps[j]).sum();
        }
        StateVector {
            dim: self.dim,
            amps: out,
        }
    }

    /// `⟨ψ|self|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Complex64 {
        let v = self.apply(psi);
        (0..self.dim).map(|i| psi.amps[i].conj() * v.amps[i]).sum()
    }

    /// Kronecker product of two 2×2 matrices.
    pub fn kron(a: &Self, b: &Self) -> Self {
        assert!(a.dim == 2 && b.dim == 2, "kron is defined for 2x2 factors");
        let mut m = Self::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        m
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data[..self.dim * self.dim]
    }
}

impl Index<(usize, usize)> for OperatorMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for OperatorMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i * self.dim + j]
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        self
    }
}

impl Sub for OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        self
    }
}

impl Neg for OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Mul<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let n = self.dim;
        let mut m = OperatorMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    m.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        m
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Complex64]> = (0..self.dim)
            .map(|i| &self.data[i * self.dim..(i + 1) * self.dim])
            .collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Single-atom lowering operator `S⁻ = |g⟩⟨e|`.
pub fn sigma_minus() -> OperatorMatrix {
    let mut m = OperatorMatrix::zeros(2);
    m[(basis::G, basis::E)] = ONE;
    m
}

/// `S⁻ ⊗ 𝟙`, lowering atom 1 of the pair.
pub fn s1_minus() -> OperatorMatrix {
    OperatorMatrix::kron(&sigma_minus(), &OperatorMatrix::identity(2))
}

/// `𝟙 ⊗ S⁻`, lowering atom 2 of the pair.
pub fn s2_minus() -> OperatorMatrix {
    OperatorMatrix::kron(&OperatorMatrix::identity(2), &sigma_minus())
}

/// Drive and decay parameters for one realization, in units of the
/// reference rate.
///
/// For a single atom only `omega1`, `delta` and `gamma1` are used; by
/// convention `omega2`, `gamma12`, `delta12` are zero and `gamma2` equals the
/// reference rate (it never enters the dynamics).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysicalParams {
    pub omega1: f64,
    pub omega2: f64,
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma12: f64,
    pub delta12: f64,
}

impl PhysicalParams {
    /// Parameters for one driven atom.
    pub fn single(omega: f64, delta: f64, gamma: f64) -> Self {
        PhysicalParams {
            omega1: omega,
            omega2: 0.0,
            delta,
            gamma1: gamma,
            gamma2: 1.0,
            gamma12: 0.0,
            delta12: 0.0,
        }
    }

    /// Two identically driven atoms with equal decay rates.
    pub fn symmetric_pair(omega: f64, delta: f64, gamma: f64, gamma12: f64, delta12: f64) -> Self {
        PhysicalParams {
            omega1: omega,
            omega2: omega,
            delta,
            gamma1: gamma,
            gamma2: gamma,
            gamma12,
            delta12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("delta", self.delta),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma12", self.gamma12),
            ("delta12", self.delta12),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.gamma1 < 0.0 {
            return Err(Error::param("gamma1", "must be non-negative"));
        }
        if self.gamma2 < 0.0 {
            return Err(Error::param("gamma2", "must be non-negative"));
        }
        let product = self.gamma1 * self.gamma2;
        let g12_sq = self.gamma12 * self.gamma12;
        if g12_sq > product * (1.0 + crate::collective_decay::PSD_RELATIVE_TOLERANCE) {
            return Err(Error::UnphysicalDecay {
                product,
                gamma12_sq: g12_sq,
            });
        }
        Ok(())
    }
}

/// `[[0, Ω/2], [Ω/2, Δ]]`.
pub fn build_single_hamiltonian(omega: f64, delta: f64) -> OperatorMatrix {
    let half = Complex64::new(omega / 2.0, 0.0);
    let mut h = OperatorMatrix::zeros(2);
    h[(0, 1)] = half;
    h[(1, 0)] = half;
    h[(1, 1)] = Complex64::new(delta, 0.0);
    h
}

/// Pair Hamiltonian `H₁⊗𝟙 + 𝟙⊗H₂ + W` with the flip-flop interaction
/// `W = δ₁₂ (S⁺⊗S⁻ + S⁻⊗S⁺)`.
pub fn build_pair_hamiltonian(p: &PhysicalParams) -> OperatorMatrix {
    let id = OperatorMatrix::identity(2);
    let h1 = build_single_hamiltonian(p.omega1, p.delta);
    let h2 = build_single_hamiltonian(p.omega2, p.delta);
    let mut h = OperatorMatrix::kron(&h1, &id) + OperatorMatrix::kron(&id, &h2);
    let d = Complex64::new(p.delta12, 0.0);
    h[(basis::GE, basis::EG)] += d;
    h[(basis::EG, basis::GE)] += d;
    h
}

/// `H_eff = H − i/2 Σ L†L`.
pub fn build_effective_hamiltonian(
    h_tot: &OperatorMatrix,
    jumps: &[OperatorMatrix],
) -> Result<OperatorMatrix> {
    let n = h_tot.dim();
    let mut j = OperatorMatrix::zeros(n);
    for l in jumps {
        if l.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: l.dim(),
            });
        }
        j = j + &l.adjoint() * l;
    }
    Ok(*h_tot - j.scale(Complex64::new(0.0, 0.5)))
}

/// `exp(m)` by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &OperatorMatrix) -> OperatorMatrix {
    let n = m.dim();
    let norm = m.norm_one();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let x = m.scale_real(0.5f64.powi(squarings));

    let mut sum = OperatorMatrix::identity(n);
    let mut term = OperatorMatrix::identity(n);
    for k in 1..=30 {
        term = (&term * &x).scale_real(1.0 / k as f64);
        sum = sum + term;
        if term.norm_one() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(−i a t)`.
pub fn matrix_exponential(a: &OperatorMatrix, t: f64) -> OperatorMatrix {
    expm(&a.scale(Complex64::new(0.0, -t)))
}

/// One no-jump step: `exp(−i H_eff dt) ψ`, renormalized to unit norm.
pub fn propagate_no_jump(psi: &StateVector, h_eff: &OperatorMatrix, dt: f64) -> StateVector {
    matrix_exponential(h_eff, dt).apply(psi).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_hamiltonian_examples() {
        assert_eq!(build_single_hamiltonian(0.0, 0.0), OperatorMatrix::zeros(2));
        let h = build_single_hamiltonian(1.0, 0.0);
        assert_eq!(
            h,
            OperatorMatrix::from_real_rows(&[&[0.0, 0.5], &[0.5, 0.0]]).unwrap()
        );
        let h = build_single_hamiltonian(2.0, -3.0);
        assert_eq!(
            h,
            OperatorMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, -3.0]]).unwrap()
        );
    }

    #[test]
    fn pair_hamiltonian_matches_symmetric_form() {
        let (w, d) = (0.8, 1.7);
        let h = build_pair_hamiltonian(&PhysicalParams::symmetric_pair(w, 0.0, 1.0, 0.0, d));
        let hw = w / 2.0;
        let expected = OperatorMatrix::from_real_rows(&[
            &[0.0, hw, hw, 0.0],
            &[hw, 0.0, d, hw],
            &[hw, d, 0.0, hw],
            &[0.0, hw, hw, 0.0],
        ])
        .unwrap();
        assert_eq!(h, expected);
        assert_eq!(h, h.adjoint());
    }

    #[test]
    fn pair_hamiltonian_detuned_and_embedded() {
        let p = PhysicalParams {
            omega1: 0.0,
            omega2: 0.0,
            delta: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma12: 0.0,
            delta12: 0.0,
        };
        assert_eq!(
            build_pair_hamiltonian(&p),
            OperatorMatrix::diagonal(&[0.0, 1.0, 1.0, 2.0]).unwrap()
        );

        let p = PhysicalParams {
            omega1: 1.0,
            omega2: 0.0,
            delta: 0.0,
            ..p
        };
        let embedded = OperatorMatrix::kron(
            &build_single_hamiltonian(1.0, 0.0),
            &OperatorMatrix::identity(2),
        );
        assert_eq!(build_pair_hamiltonian(&p), embedded);
    }

    #[test]
    fn drive_couplings_land_on_the_right_pairs() {
        let p = PhysicalParams {
            omega1: 3.0,
            omega2: 5.0,
            delta: 0.0,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma12: 0.0,
            delta12: 0.0,
        };
        let h = build_pair_hamiltonian(&p);
        use basis::*;
        assert_eq!(h[(GG, GE)], c(2.5, 0.0));
        assert_eq!(h[(EG, EE)], c(2.5, 0.0));
        assert_eq!(h[(GG, EG)], c(1.5, 0.0));
        assert_eq!(h[(GE, EE)], c(1.5, 0.0));
    }

    #[test]
    fn effective_hamiltonian_examples() {
        let h = build_single_hamiltonian(1.0, 0.5);
        assert_eq!(build_effective_hamiltonian(&h, &[]).unwrap(), h);

        let gamma: f64 = 0.7;
        let l = sigma_minus().scale_real(gamma.sqrt());
        let heff = build_effective_hamiltonian(&h, &[l]).unwrap();
        let anti = (heff - h).scale(c(0.0, 1.0));
        let expected = OperatorMatrix::diagonal(&[0.0, gamma / 2.0]).unwrap();
        assert!(anti.max_abs_diff(&expected) < 1e-15);

        let g: f64 = 1.3;
        let ls = [s1_minus().scale_real(g.sqrt()), s2_minus().scale_real(g.sqrt())];
        let h4 = OperatorMatrix::zeros(4);
        let heff = build_effective_hamiltonian(&h4, &ls).unwrap();
        let j = heff.scale(c(0.0, 1.0));
        let expected = OperatorMatrix::diagonal(&[0.0, g / 2.0, g / 2.0, g]).unwrap();
        assert!(j.max_abs_diff(&expected) < 1e-15);

        let err = build_effective_hamiltonian(&h4, &[sigma_minus()]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                found: 2
            }
        );
    }

    #[test]
    fn exponential_examples() {
        let z = OperatorMatrix::zeros(4);
        assert_eq!(matrix_exponential(&z, 3.0), OperatorMatrix::identity(4));

        let omega = 1.3;
        for &t in &[0.1, 1.0, 4.7, 30.0] {
            let u = matrix_exponential(&build_single_hamiltonian(omega, 0.0), t);
            let expected = c(0.0, -(omega * t / 2.0).sin());
            assert!((u[(basis::E, basis::G)] - expected).norm() < 1e-12);
            assert!((u[(basis::G, basis::G)] - (omega * t / 2.0).cos()).norm() < 1e-12);
        }

        let delta = 0.9;
        let t = 2.3;
        let u = matrix_exponential(&OperatorMatrix::diagonal(&[0.0, delta, delta, 2.0 * delta]).unwrap(), t);
        for (i, e) in [0.0, delta, delta, 2.0 * delta].iter().enumerate() {
            assert!((u[(i, i)] - c(0.0, -e * t).exp()).norm() < 1e-13);
        }
        assert!(u.max_abs_diff(&OperatorMatrix::diagonal(&[1.0, 1.0, 1.0, 1.0]).unwrap()) > 0.1);
    }

    #[test]
    fn no_jump_examples() {
        let psi = StateVector::new(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = propagate_no_jump(&psi, &OperatorMatrix::zeros(2), 0.01);
        assert!((out.amplitude(0) - psi.amplitude(0)).norm() < 1e-15);
        assert!((out.amplitude(1) - psi.amplitude(1)).norm() < 1e-15);

        let h = build_single_hamiltonian(1.0, 0.3);
        let raw = matrix_exponential(&h, 1e-3).apply(&psi);
        assert!((raw.norm() - 1.0).abs() < 1e-10);

        let gamma: f64 = 1.0;
        let dt = 1e-3;
        let excited = StateVector::basis_state(2, basis::E).unwrap();
        let heff = build_effective_hamiltonian(
            &OperatorMatrix::zeros(2),
            &[sigma_minus().scale_real(gamma.sqrt())],
        )
        .unwrap();
        let raw = matrix_exponential(&heff, dt).apply(&excited);
        assert!((raw.norm() - (-gamma * dt / 2.0).exp()).abs() < 1e-15);
        let out = propagate_no_jump(&excited, &heff, dt);
        assert!((out.population(basis::E) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(StateVector::new(&[ONE; 3]).is_err());
        assert!(StateVector::basis_state(4, 4).is_err());
        assert!(OperatorMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0]]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::symmetric_pair(1.0, 0.0, 1.0, 0.9, 3.0).validate().is_ok());
        assert!(PhysicalParams::symmetric_pair(1.0, 0.0, 1.0, 1.1, 3.0).validate().is_err());
        let mut p = PhysicalParams::single(1.0, 0.0, 1.0);
        p.gamma1 = -0.1;
        assert!(p.validate().is_err());
        p.gamma1 = f64::NAN;
        assert!(p.validate().is_err());
    }
}
