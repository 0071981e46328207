//! Closed-form propagator of the optimal control law.
//!
//! Because the Hamiltonian commutes with `σz¹` and `σz³` at all times, the
//! evolution splits into four invariant sectors labelled by `(q1 q3)`. In
//! each sector qubit 2 sees a two-level problem whose detuning is shifted
//! by the sector value `e_i` of `σz¹ + K σz³`, and the rotating transverse
//! field is removed by passing to the frame precessing at `Ω̂`. The
//! propagator is then assembled from per-sector Rabi oscillations:
//!
//! ```text
//! b_i = sin φ + (e_i − Ω̂/2)/ω_K,   ω_i = ω_K √(cos²φ + b_i²),
//! s_i = sin(ω_i τ)/ω_i,            c_i = cos(ω_i τ),
//! U(τ) = A − i (Bx σx² + By σy² + Bz σz²),
//! ```
//!
//! with the 1,3-diagonal amplitude blocks
//!
//! ```text
//! A_i  = cos(Ω̂τ/2) c_i − sin(Ω̂τ/2) (ω_K b_i) s_i,
//! Bx_i = B̂0 s_i cos(Ω̂τ/2 + θ0),
//! By_i = B̂0 s_i sin(Ω̂τ/2 + θ0),
//! Bz_i = sin(Ω̂τ/2) c_i + cos(Ω̂τ/2) (ω_K b_i) s_i.
//! ```

use serde::{Deserialize, Serialize};

use crate::model::{sector_shifts, ControlConstants, FeasibilityError, ModelParams};
use crate::operator::{pauli_product, Axis, DiagonalBlock13, Operator};

/// Below this sector frequency, `sin(ω τ)/ω` switches to its series form.
const SMALL_FREQ: f64 = 1e-8;

/// Per-sector spectral data of the optimal control law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstants {
    /// Field angle `φ = atan2(B̂z, B̂0)`.
    pub phi: f64,
    /// Transverse energy `ω_K = √(B̂0² + B̂z²)`.
    pub omega_k: f64,
    /// Sector values `e_i` of `σz¹ + K σz³`.
    pub shift: [f64; 4],
    /// Dimensionless sector detunings `b_i`.
    pub b: [f64; 4],
    /// Sector Rabi frequencies `ω_i`.
    pub omega: [f64; 4],
}

impl SpectralConstants {
    /// Trigonometric profile `(s_i, c_i)` at evolution time `tau`.
    pub fn trig_profile(&self, tau: f64) -> TrigProfile {
        let mut s = [0.0; 4];
        let mut c = [0.0; 4];
        for i in 0..4 {
            let w = self.omega[i];
            let x = w * tau;
            s[i] = if w < SMALL_FREQ {
                tau * (1.0 - x * x / 6.0)
            } else {
                x.sin() / w
            };
            c[i] = x.cos();
        }
        TrigProfile { s, c }
    }
}

/// Sector trigonometric profile at a fixed evolution time:
/// `s_i = sin(ω_i τ)/ω_i` and `c_i = cos(ω_i τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigProfile {
    /// Scaled sines `s_i`.
    pub s: [f64; 4],
    /// Cosines `c_i`.
    pub c: [f64; 4],
}

/// Computes the sector detunings and frequencies for a control law.
///
/// # Errors
///
/// Rejects infeasible parameters (`ω_K² ≤ 0`) and control constants that
/// break the energy constraint.
pub fn spectral_constants(
    p: &ModelParams,
    c: &ControlConstants,
) -> Result<SpectralConstants, FeasibilityError> {
    p.validate()?;
    c.validate_against(p)?;
    let omega_k = p.omega_k_sq().sqrt();
    let phi = c.phi();
    let sin_phi = phi.sin();
    let cos_phi = phi.cos();
    let half_precession = c.omega / 2.0;
    let shift = sector_shifts(p.k);
    let mut b = [0.0; 4];
    let mut omega = [0.0; 4];
    for i in 0..4 {
        b[i] = sin_phi + (shift[i] - half_precession) / omega_k;
        omega[i] = omega_k * (cos_phi * cos_phi + b[i] * b[i]).sqrt();
    }
    Ok(SpectralConstants {
        phi,
        omega_k,
        shift,
        b,
        omega,
    })
}

/// Sector amplitudes `(A, Bx, By, Bz)` of the propagator at time `tau`.
pub(crate) fn sector_amplitudes(
    tau: f64,
    sc: &SpectralConstants,
    c: &ControlConstants,
) -> [[f64; 4]; 4] {
    let tp = sc.trig_profile(tau);
    let half = c.omega * tau / 2.0;
    let (sin_half, cos_half) = half.sin_cos();
    let (sin_theta, cos_theta) = (half + c.theta0).sin_cos();
    let mut a = [0.0; 4];
    let mut bx = [0.0; 4];
    let mut by = [0.0; 4];
    let mut bz = [0.0; 4];
    for i in 0..4 {
        let w = sc.omega_k * sc.b[i];
        a[i] = cos_half * tp.c[i] - sin_half * w * tp.s[i];
        bx[i] = c.b0 * tp.s[i] * cos_theta;
        by[i] = c.b0 * tp.s[i] * sin_theta;
        bz[i] = sin_half * tp.c[i] + cos_half * w * tp.s[i];
    }
    [a, bx, by, bz]
}

/// Closed-form propagator `U_opt(τ)` in the computational frame.
///
/// # Errors
///
/// Same feasibility conditions as [`spectral_constants`].
pub fn propagator_closed_form(
    tau: f64,
    p: &ModelParams,
    c: &ControlConstants,
) -> Result<Operator, FeasibilityError> {
    let sc = spectral_constants(p, c)?;
    let [a, bx, by, bz] = sector_amplitudes(tau, &sc, c);
    let i_unit = num_complex::Complex64::new(0.0, 1.0);
    let mut u = DiagonalBlock13::from_real(a).embed();
    u -= DiagonalBlock13::from_real(bx).embed() * pauli_product(Axis::I, Axis::X, Axis::I) * i_unit;
    u -= DiagonalBlock13::from_real(by).embed() * pauli_product(Axis::I, Axis::Y, Axis::I) * i_unit;
    u -= DiagonalBlock13::from_real(bz).embed() * pauli_product(Axis::I, Axis::Z, Axis::I) * i_unit;
    Ok(u)
}

/// Propagator conjugated into the rotated frame, `V³ U_opt(τ) V³`.
///
/// # Errors
///
/// Same feasibility conditions as [`spectral_constants`].
pub fn propagator_rotated(
    tau: f64,
    p: &ModelParams,
    c: &ControlConstants,
) -> Result<Operator, FeasibilityError> {
    let v3 = crate::operator::walsh_hadamard_on_qubit3();
    Ok(v3 * propagator_closed_form(tau, p, c)? * v3)
}
