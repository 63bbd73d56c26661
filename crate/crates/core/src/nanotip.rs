//! Electromagnetic environment of a subwavelength dielectric sphere.
//!
//! Lengths are in nanometres and rates in units of the free-space decay rate
//! `γ₀`. Positions use spherical coordinates about the sphere centre with the
//! polar axis along the incident polarisation `ẑ`; the incident wave
//! propagates along `ŷ`, so the forward half-space is `y > 0`.

use std::f64::consts::PI;
use std::io::{self, Write};

use log::warn;
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::fmt_sig;
use crate::quantum_core::PhysicalParams;
use crate::seeding::rng_from_seed;

pub type Field = Vector3<Complex64>;

/// Above this size parameter `k₀R` a warning is logged.
pub const SIZE_PARAMETER_WARN: f64 = 0.3;
/// At or above this size parameter the geometry is rejected.
pub const SIZE_PARAMETER_LIMIT: f64 = 1.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point `(r, θ, φ)`; angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spherical {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Spherical {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        Spherical { r, theta, phi }
    }

    pub fn from_degrees(r: f64, theta_deg: f64, phi_deg: f64) -> Self {
        Spherical::new(r, theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn from_cartesian(v: &Vector3<f64>) -> Self {
        let r = v.norm();
        if r == 0.0 {
            return Spherical::new(0.0, 0.0, 0.0);
        }
        Spherical::new(r, (v.z / r).clamp(-1.0, 1.0).acos(), v.y.atan2(v.x))
    }

    pub fn to_cartesian(&self) -> Vector3<f64> {
        self.r * self.r_hat()
    }

    pub fn r_hat(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    pub fn theta_hat(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(ct * cp, ct * sp, -st)
    }

    pub fn phi_hat(&self) -> Vector3<f64> {
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(-sp, cp, 0.0)
    }

    /// Converts `(v_r, v_θ, v_φ)` components at this point to Cartesian ones.
    pub fn to_cartesian_components(&self, v: &Vector3<f64>) -> Vector3<f64> {
        v.x * self.r_hat() + v.y * self.theta_hat() + v.z * self.phi_hat()
    }
}

/// Dielectric sphere driven by a `ẑ`-polarised wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipGeometry {
    /// Sphere radius [nm].
    pub r_tip: f64,
    /// Real relative permittivity.
    pub epsilon: f64,
    /// Transition wavenumber [1/nm].
    pub k0: f64,
    /// Incident amplitude; drops out after Rabi calibration.
    pub e0: f64,
    /// Free-space decay rate in the output rate unit.
    pub gamma0: f64,
    /// Rabi frequency at `reference` [γ₀].
    pub rabi_ref: f64,
    /// Calibration point for the Rabi frequency.
    pub reference: Spherical,
}

impl Default for TipGeometry {
    /// Fused silica (`ε = 2.1`), `R = 100 nm`, `λ₀ = 780 nm`, calibrated to
    /// `Ω = γ₀` on the sphere surface at `θ = φ = 90°`.
    fn default() -> Self {
        TipGeometry {
            r_tip: 100.0,
            epsilon: 2.1,
            k0: 2.0 * PI / 780.0,
            e0: 1.0,
            gamma0: 1.0,
            rabi_ref: 1.0,
            reference: Spherical::from_degrees(100.0, 90.0, 90.0),
        }
    }
}

impl TipGeometry {
    /// Default geometry with the given radius, permittivity and vacuum
    /// wavelength; the calibration point follows the surface. Logs a warning
    /// when `k₀R` exceeds [`SIZE_PARAMETER_WARN`].
    pub fn new(r_tip: f64, epsilon: f64, wavelength: f64) -> Result<Self> {
        let tip = TipGeometry {
            r_tip,
            epsilon,
            k0: 2.0 * PI / wavelength,
            reference: Spherical::from_degrees(r_tip, 90.0, 90.0),
            ..TipGeometry::default()
        };
        tip.validate()?;
        let x = tip.size_parameter();
        if x > SIZE_PARAMETER_WARN {
            warn!("k0*r_tip = {x:.3} exceeds {SIZE_PARAMETER_WARN}; the small-sphere approximations degrade");
        }
        Ok(tip)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k0
    }

    pub fn size_parameter(&self) -> f64 {
        self.k0 * self.r_tip
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("r_tip", self.r_tip)?;
        positive("epsilon", self.epsilon)?;
        if self.epsilon == 1.0 {
            return Err(Error::param("epsilon", "a sphere with epsilon = 1 scatters no field"));
        }
        positive("k0", self.k0)?;
        positive("e0", self.e0)?;
        positive("gamma0", self.gamma0)?;
        positive("rabi_ref", self.rabi_ref)?;
        let x = self.size_parameter();
        if x >= SIZE_PARAMETER_LIMIT {
            return Err(Error::param(
                "r_tip",
                format!("k0*r_tip = {x:.3} is not subwavelength (limit {SIZE_PARAMETER_LIMIT})"),
            ));
        }
        if self.reference.r < self.r_tip {
            return Err(Error::InsideSphere {
                r: self.reference.r,
                r_tip: self.r_tip,
            });
        }
        Ok(())
    }
}

/// Radiation-damped polarisability `α₀ / (1 − i k³α₀/6π)` with the
/// quasi-static `α₀ = 4πR³(ε − 1)/(ε + 2)` [nm³].
pub fn polarizability(tip: &TipGeometry, k: f64) -> Complex64 {
    let a0 = 4.0 * PI * tip.r_tip.powi(3) * (tip.epsilon - 1.0) / (tip.epsilon + 2.0);
    Complex64::new(a0, 0.0) / Complex64::new(1.0, -k.powi(3) * a0 / (6.0 * PI))
}

fn check_outside(tip: &TipGeometry, pos: &Spherical) -> Result<()> {
    if pos.r.is_finite() && pos.r >= tip.r_tip {
        Ok(())
    } else {
        Err(Error::InsideSphere {
            r: pos.r,
            r_tip: tip.r_tip,
        })
    }
}

/// Field scattered by the sphere, as `(E_r, E_θ, E_φ)` components.
pub fn local_field(tip: &TipGeometry, pos: &Spherical) -> Result<Field> {
    check_outside(tip, pos)?;
    let kr = tip.k0 * pos.r;
    let pre = tip.e0 * polarizability(tip, tip.k0) / (4.0 * PI * pos.r.powi(3)) * (I * kr).exp();
    let (st, ct) = pos.theta.sin_cos();
    let e_r = pre * 2.0 * ct * Complex64::new(1.0, -kr);
    let e_theta = pre * st * Complex64::new(1.0 - kr * kr, -kr);
    Ok(Vector3::new(e_r, e_theta, Complex64::new(0.0, 0.0)))
}

/// Euclidean norm of a complex vector.
pub fn field_norm(e: &Field) -> f64 {
    e.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Real unit vector along the major axis of the polarisation ellipse of
/// `field`, in the same basis as `field`. The sign is fixed by making the
/// second component positive, then the first, then the third. For circular
/// polarisation the second basis vector (then the first, then the third) is
/// projected onto the plane of the circle.
pub fn dipole_orientation(field: &Field) -> Result<Vector3<f64>> {
    let a = field.map(|c| c.re);
    let b = field.map(|c| c.im);
    let (aa, bb, ab) = (a.norm_squared(), b.norm_squared(), a.dot(&b));
    let scale = aa + bb;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::ZeroField("dipole orientation"));
    }
    let spread = ((aa - bb).powi(2) + 4.0 * ab * ab).sqrt();
    let v = if spread > 1e-12 * scale {
        let phi0 = 0.5 * (-2.0 * ab).atan2(aa - bb);
        a * phi0.cos() - b * phi0.sin()
    } else {
        // Circle spanned by the orthogonal, equally long a and b.
        [1usize, 0, 2]
            .iter()
            .map(|&k| {
                let e = Vector3::ith(k, 1.0);
                a * (a.dot(&e) / aa) + b * (b.dot(&e) / bb)
            })
            .find(|p| p.norm() > 1e-12)
            .expect("a plane contains a non-orthogonal basis direction")
    };
    let mut v = v.normalize();
    let tie = 1e-12;
    let sign = [1usize, 0, 2]
        .iter()
        .map(|&k| v[k])
        .find(|c| c.abs() > tie)
        .unwrap_or(1.0);
    if sign < 0.0 {
        v = -v;
    }
    Ok(v)
}

/// Bracket of the radial-dipole rate correction.
fn perp_bracket(x: f64) -> Complex64 {
    Complex64::new(-x.powi(-4) + x.powi(-6), -2.0 * x.powi(-5))
}

/// Bracket of the tangential-dipole rate correction.
fn para_bracket(x: f64) -> Complex64 {
    Complex64::new(
        x.powi(-2) - 3.0 * x.powi(-4) + x.powi(-6),
        2.0 * x.powi(-3) - 2.0 * x.powi(-5),
    )
}

/// `(γ⊥, γ∥)` at distance `r` from the centre, in units of `gamma0`.
pub fn purcell_components(tip: &TipGeometry, r: f64) -> Result<(f64, f64)> {
    check_outside(tip, &Spherical::new(r, 0.0, 0.0))?;
    let k = tip.k0;
    let x = k * r;
    let ae = polarizability(tip, k) * (2.0 * I * x).exp();
    let perp = 1.0 + 3.0 * k.powi(3) / (2.0 * PI) * (ae * perp_bracket(x)).im;
    let para = 1.0 + 3.0 * k.powi(3) / (8.0 * PI) * (ae * para_bracket(x)).im;
    Ok((perp * tip.gamma0, para * tip.gamma0))
}

/// Decay rate of a dipole with Cartesian unit orientation `dipole` at `pos`:
/// `γ⊥ (d̂·r̂)² + γ∥ [1 − (d̂·r̂)²]`.
pub fn purcell_rate(tip: &TipGeometry, pos: &Spherical, dipole: &Vector3<f64>) -> Result<f64> {
    let (perp, para) = purcell_components(tip, pos.r)?;
    let c2 = dipole.dot(&pos.r_hat()).powi(2);
    let rate = perp * c2 + para * (1.0 - c2);
    if rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::param(
            "position",
            format!("non-positive decay rate {rate} at r = {} nm", pos.r),
        ))
    }
}

/// An emitter placed near the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSite {
    pub position: Spherical,
    /// Cartesian unit vector.
    pub dipole: Vector3<f64>,
    pub gamma: f64,
    pub rabi: f64,
}

impl AtomSite {
    /// Aligns the dipole with the local field and evaluates the local decay
    /// and Rabi rates.
    pub fn at(tip: &TipGeometry, position: Spherical) -> Result<Self> {
        let field = local_field(tip, &position)?;
        let local = dipole_orientation(&field)?;
        let dipole = position.to_cartesian_components(&local);
        Ok(AtomSite {
            position,
            dipole,
            gamma: purcell_rate(tip, &position, &dipole)?,
            rabi: rabi_from_field(tip, &field)?,
        })
    }
}

/// `(γ₁₂, δ₁₂)` from the retarded dipole-dipole coupling, scaled by
/// `√(γ₁γ₂)` of the two sites. Exactly symmetric in the two sites.
pub fn pair_coefficients(site1: &AtomSite, site2: &AtomSite, k0: f64) -> Result<(f64, f64)> {
    let sep = site1.position.to_cartesian() - site2.position.to_cartesian();
    let r12 = sep.norm();
    if !(r12 > 0.0) {
        return Err(Error::CoincidentPositions);
    }
    let (g, d) = free_space_coupling(&site1.dipole, &site2.dipole, &(sep / r12), k0 * r12);
    let s = (site1.gamma * site2.gamma).sqrt();
    Ok((s * g, s * d))
}

/// Normalised `(γ₁₂, δ₁₂)/√(γ₁γ₂)` for unit dipoles `d1`, `d2`, unit
/// separation `u` and `x = k₀r₁₂`.
pub fn free_space_coupling(d1: &Vector3<f64>, d2: &Vector3<f64>, u: &Vector3<f64>, x: f64) -> (f64, f64) {
    let dd = d1.dot(d2);
    // The product of projections is symmetric under u → −u and d1 ↔ d2.
    let proj = d1.dot(u) * d2.dot(u);
    let transverse = dd - proj;
    let longitudinal = dd - 3.0 * proj;
    let (s, c) = x.sin_cos();
    let gamma = 1.5 * (transverse * s / x + longitudinal * (c / (x * x) - s / x.powi(3)));
    let delta = 0.75 * (-transverse * c / x + longitudinal * (s / (x * x) + c / x.powi(3)));
    (gamma, delta)
}

fn rabi_from_field(tip: &TipGeometry, field: &Field) -> Result<f64> {
    let reference = field_norm(&local_field(tip, &tip.reference)?);
    if !(reference > 0.0) {
        return Err(Error::ZeroField("Rabi calibration point"));
    }
    Ok(tip.rabi_ref * field_norm(field) / reference)
}

/// Rabi frequency at `pos`, proportional to `‖E‖` and equal to
/// `tip.rabi_ref` at the calibration point.
pub fn rabi_at(tip: &TipGeometry, pos: &Spherical) -> Result<f64> {
    rabi_from_field(tip, &local_field(tip, pos)?)
}

/// Volume of the shell `r_inner ≤ r ≤ r_outer`, full and forward half [nm³].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellVolume {
    pub full_nm3: f64,
    pub half_nm3: f64,
}

impl ShellVolume {
    pub fn new(r_inner: f64, r_outer: f64) -> Self {
        let full = 4.0 / 3.0 * PI * (r_outer.powi(3) - r_inner.powi(3));
        ShellVolume {
            full_nm3: full,
            half_nm3: 0.5 * full,
        }
    }

    pub fn full_cm3(&self) -> f64 {
        self.full_nm3 * 1e-21
    }

    pub fn half_cm3(&self) -> f64 {
        self.half_nm3 * 1e-21
    }
}

/// `count` positions uniform in volume over the forward half shell
/// `r_inner ≤ r ≤ r_outer`, `y > 0`.
pub fn sample_sites(
    tip: &TipGeometry,
    r_inner: f64,
    r_outer: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Spherical>> {
    if !(r_inner >= tip.r_tip && r_outer > r_inner && r_outer.is_finite()) {
        return Err(Error::param(
            "r_inner",
            format!("need r_tip <= r_inner < r_outer, got {r_inner}, {r_outer}"),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let (lo, hi) = (r_inner.powi(3), r_outer.powi(3));
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let cos_theta = 1.0 - 2.0 * rng.random::<f64>();
            // φ in (0, π) keeps sinθ·sinφ > 0 up to the measure-zero boundary.
            let phi = loop {
                let p = PI * rng.random::<f64>();
                if p > 0.0 {
                    break p;
                }
            };
            let r = (lo + u * (hi - lo)).cbrt().clamp(r_inner, r_outer);
            Spherical::new(r, cos_theta.clamp(-1.0, 1.0).acos(), phi)
        })
        .collect())
}

/// Writes positions as `x_nm,y_nm,z_nm`.
pub fn write_sites_csv<W: Write>(sites: &[Spherical], mut w: W) -> io::Result<()> {
    writeln!(w, "x_nm,y_nm,z_nm")?;
    for s in sites {
        let v = s.to_cartesian();
        writeln!(w, "{},{},{}", fmt_sig(v.x, 12), fmt_sig(v.y, 12), fmt_sig(v.z, 12))?;
    }
    Ok(())
}

/// Drive and decay parameters for one or two emitters at `positions`, with
/// `Δ = 0`. For one emitter the second atom is absent: `Ω₂ = γ₁₂ = δ₁₂ = 0`
/// and `γ₂ = γ₀` is a placeholder.
pub fn realize_parameters(tip: &TipGeometry, positions: &[Spherical]) -> Result<(PhysicalParams, Vec<AtomSite>)> {
    let sites = positions
        .iter()
        .map(|p| AtomSite::at(tip, *p))
        .collect::<Result<Vec<_>>>()?;
    let params = match sites.as_slice() {
        [s] => PhysicalParams {
            omega1: s.rabi,
            omega2: 0.0,
            delta: 0.0,
            gamma1: s.gamma,
            gamma2: tip.gamma0,
            gamma12: 0.0,
            delta12: 0.0,
        },
        [s1, s2] => {
            let (gamma12, delta12) = pair_coefficients(s1, s2, tip.k0)?;
            PhysicalParams {
                omega1: s1.rabi,
                omega2: s2.rabi,
                delta: 0.0,
                gamma1: s1.gamma,
                gamma2: s2.gamma,
                gamma12,
                delta12,
            }
        }
        _ => {
            return Err(Error::param(
                "positions",
                format!("need one or two emitters, got {}", sites.len()),
            ))
        }
    };
    params.validate()?;
    Ok((params, sites))
}

/// Direction of the fixed separation between the two emitters in a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MapGeometry {
    /// Second atom displaced along `ẑ`.
    A,
    /// Second atom displaced along `ŷ`.
    B,
}

impl MapGeometry {
    pub fn axis(self) -> Vector3<f64> {
        match self {
            MapGeometry::A => Vector3::z(),
            MapGeometry::B => Vector3::y(),
        }
    }
}

impl std::str::FromStr for MapGeometry {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(MapGeometry::A),
            "B" | "b" => Ok(MapGeometry::B),
            other => Err(format!("unknown geometry '{other}' (expected A or B)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub r_nm: f64,
    pub theta_deg: f64,
    /// `γ₁₂/γ₀`; NaN where invalid.
    pub gamma12: f64,
    /// `δ₁₂/γ₀`; NaN where invalid.
    pub delta12: f64,
    /// False when either emitter would sit inside the sphere.
    pub valid: bool,
}

/// `(γ₁₂, δ₁₂)` over a `(r, θ)` grid at `φ = 90°`. The first emitter sits at
/// the grid point and the second is displaced by `r12` along the geometry's
/// axis. Rows are ordered with `θ` varying fastest.
pub fn parameter_map(
    tip: &TipGeometry,
    geometry: MapGeometry,
    r_grid: &[f64],
    theta_grid_deg: &[f64],
    r12: f64,
) -> Result<Vec<MapPoint>> {
    if !(r12.is_finite() && r12 > 0.0) {
        return Err(Error::param("r12", "must be positive"));
    }
    let cells: Vec<(f64, f64)> = r_grid
        .iter()
        .flat_map(|&r| theta_grid_deg.iter().map(move |&t| (r, t)))
        .collect();
    cells
        .par_iter()
        .map(|&(r, theta_deg)| {
            let p1 = Spherical::from_degrees(r, theta_deg, 90.0);
            let p2 = Spherical::from_cartesian(&(p1.to_cartesian() + r12 * geometry.axis()));
            let invalid = MapPoint {
                r_nm: r,
                theta_deg,
                gamma12: f64::NAN,
                delta12: f64::NAN,
                valid: false,
            };
            if p1.r < tip.r_tip || p2.r < tip.r_tip {
                return Ok(invalid);
            }
            let s1 = AtomSite::at(tip, p1)?;
            let s2 = AtomSite::at(tip, p2)?;
            let (gamma12, delta12) = pair_coefficients(&s1, &s2, tip.k0)?;
            Ok(MapPoint {
                gamma12,
                delta12,
                valid: true,
                ..invalid
            })
        })
        .collect()
}

/// Writes `r_nm,theta_deg,gamma12_over_gamma0,delta12_over_gamma0,valid`.
pub fn write_map_csv<W: Write>(points: &[MapPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "r_nm,theta_deg,gamma12_over_gamma0,delta12_over_gamma0,valid")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig(p.r_nm, 12),
            fmt_sig(p.theta_deg, 12),
            fmt_sig(p.gamma12, 12),
            fmt_sig(p.delta12, 12),
            u8::from(p.valid)
        )?;
    }
    Ok(())
}
