//! Controlled Ising chain: Hamiltonian, control-field law, and target gates.
//!
//! The chain couples qubit 2 to its neighbors through `σz σz` terms with
//! strengths `J12` and `J23`; all quantities are rescaled by `J12`, so time
//! is `τ = J12 t`, the coupling ratio is `K = J23/J12`, and the control
//! energy budget is `ω̂ = ω/J12`. The control is a classical field `B̂(τ)`
//! on qubit 2 alone; on the optimal protocol its z-component is constant
//! and its transverse part precesses at frequency `Ω̂`:
//!
//! ```text
//! Ĥ(τ) = σz¹σz² + K σz²σz³ + B̂(τ)·σ⃗²,   B̂(τ) = (B̂0 cos θ, B̂0 sin θ, B̂z),
//! θ(τ) = Ω̂τ + θ0,   B̂0² + B̂z² = ω_K² := ω̂² − (1 + K²).
//! ```
//!
//! The rotated frame conjugates everything by `V³` (Walsh-Hadamard on
//! qubit 3), replacing `σz²σz³` with `σz²σx³`; it is the frame in which
//! `CNOT(1,3)` becomes diagonal in the 1,3 subspace.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

use crate::operator::{pauli_product, walsh_hadamard_on_qubit3, Axis, DiagonalBlock13, Operator};

/// Absolute tolerance for the energy-constraint consistency check
/// `B̂0² + B̂z² = ω_K²`.
pub const ENERGY_TOL: f64 = 1e-10;

/// Feasibility failures of model parameters or control constants.
#[derive(Debug, Clone, Error)]
pub enum FeasibilityError {
    /// The energy budget cannot support any control field.
    #[error(
        "infeasible energy: ω_K² = ω̂² − (1 + K²) = {omega_k_sq:.6e} ≤ 0 \
         (ω̂ = {omega_hat}, K = {k}); increase the control energy"
    )]
    InfeasibleEnergy {
        /// Rescaled energy `ω̂`.
        omega_hat: f64,
        /// Coupling ratio `K`.
        k: f64,
        /// Resulting `ω_K²`.
        omega_k_sq: f64,
    },
    /// Control constants violate the energy constraint of the parameters.
    #[error(
        "control energy B̂0² + B̂z² = {control:.12} does not match \
         ω_K² = {budget:.12} within {tol:.1e}"
    )]
    EnergyMismatch {
        /// `B̂0² + B̂z²` of the control constants.
        control: f64,
        /// `ω_K²` of the model parameters.
        budget: f64,
        /// Tolerance applied.
        tol: f64,
    },
    /// A parameter is NaN or infinite.
    #[error("non-finite parameter: {name} = {value}")]
    NonFinite {
        /// Field name.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
}

/// Basis frame of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Computational product basis `|q1 q2 q3>`.
    Computational,
    /// Conjugated by `V³` (Walsh-Hadamard on qubit 3).
    RotatedQubit3,
}

/// Which entangling gate is being synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// Symmetric entangler `U_s^13 = e^{-i(π/4)(σz¹σz³ + σz¹ + σz³)}`.
    Us13,
    /// `CNOT(1,3)` with qubit 1 as control and qubit 3 as target.
    Cnot13,
}

impl GateKind {
    /// Lowercase name used by the CLI and serialized reports.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Us13 => "us13",
            GateKind::Cnot13 => "cnot13",
        }
    }

    /// Frame in which the gate matrix takes its diagonal sector form.
    pub fn diagonal_frame(self) -> Frame {
        match self {
            GateKind::Us13 => Frame::Computational,
            GateKind::Cnot13 => Frame::RotatedQubit3,
        }
    }
}

/// Static model parameters: coupling ratio and energy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coupling ratio `K = J23/J12`.
    pub k: f64,
    /// Rescaled control energy `ω̂ = ω/J12`.
    pub omega_hat: f64,
    /// Physical coupling `J12` in Hz, kept only for unit conversion.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j12_hz: Option<f64>,
}

impl ModelParams {
    /// Parameters with a given coupling ratio and energy budget.
    pub fn new(k: f64, omega_hat: f64) -> Self {
        Self {
            k,
            omega_hat,
            j12_hz: None,
        }
    }

    /// Attaches the physical `J12` coupling in Hz.
    pub fn with_j12_hz(mut self, j12_hz: f64) -> Self {
        self.j12_hz = Some(j12_hz);
        self
    }

    /// Parameters whose energy budget exactly matches a set of control
    /// constants: `ω̂² = 1 + K² + B̂0² + B̂z²`.
    pub fn implied_by(k: f64, c: &ControlConstants) -> Self {
        Self::new(k, (1.0 + k * k + c.b0 * c.b0 + c.bz * c.bz).sqrt())
    }

    /// Squared transverse energy budget `ω_K² = ω̂² − (1 + K²)`.
    pub fn omega_k_sq(&self) -> f64 {
        self.omega_hat * self.omega_hat - (1.0 + self.k * self.k)
    }

    /// `K − 1`, the detuning from equal couplings.
    pub fn delta_k(&self) -> f64 {
        self.k - 1.0
    }

    /// `true` for the negative-coupling branch, which the solvers treat
    /// as experimental.
    pub fn is_experimental_negative_k(&self) -> bool {
        self.k < 0.0
    }

    /// Validates finiteness and the feasibility condition `ω_K² > 0`.
    ///
    /// # Errors
    ///
    /// [`FeasibilityError::NonFinite`] for NaN or infinite fields,
    /// [`FeasibilityError::InfeasibleEnergy`] when the budget cannot
    /// support a nonzero control field.
    pub fn validate(&self) -> Result<(), FeasibilityError> {
        for (name, value) in [("K", self.k), ("omega_hat", self.omega_hat)] {
            if !value.is_finite() {
                return Err(FeasibilityError::NonFinite { name, value });
            }
        }
        let omega_k_sq = self.omega_k_sq();
        if omega_k_sq <= 0.0 {
            return Err(FeasibilityError::InfeasibleEnergy {
                omega_hat: self.omega_hat,
                k: self.k,
                omega_k_sq,
            });
        }
        Ok(())
    }
}

/// Integrals of motion of the optimal control law, plus the duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConstants {
    /// Transverse amplitude `B̂0 ≥ 0`.
    pub b0: f64,
    /// Longitudinal component `B̂z` (constant along the protocol).
    pub bz: f64,
    /// Precession frequency `Ω̂`.
    pub omega: f64,
    /// Initial phase `θ0` in radians.
    pub theta0: f64,
    /// Rescaled duration `τ* = J12 T`.
    pub tau_star: f64,
}

impl ControlConstants {
    /// Control energy `B̂0² + B̂z²`, which must equal `ω_K²`.
    pub fn energy_sq(&self) -> f64 {
        self.b0 * self.b0 + self.bz * self.bz
    }

    /// Field angle `φ = atan2(B̂z, B̂0)`; with `B̂0 ≥ 0` this lies in
    /// `[−π/2, π/2]`.
    pub fn phi(&self) -> f64 {
        self.bz.atan2(self.b0)
    }

    /// Precession phase `θ(τ) = Ω̂τ + θ0`.
    pub fn theta(&self, tau: f64) -> f64 {
        self.omega * tau + self.theta0
    }

    /// Checks the energy constraint against the parameters.
    ///
    /// # Errors
    ///
    /// [`FeasibilityError::EnergyMismatch`] when `B̂0² + B̂z²` deviates
    /// from `ω_K²` by more than [`ENERGY_TOL`].
    pub fn validate_against(&self, p: &ModelParams) -> Result<(), FeasibilityError> {
        let control = self.energy_sq();
        let budget = p.omega_k_sq();
        if (control - budget).abs() > ENERGY_TOL {
            return Err(FeasibilityError::EnergyMismatch {
                control,
                budget,
                tol: ENERGY_TOL,
            });
        }
        Ok(())
    }
}

/// Control field `B̂(τ) = (B̂0 cos θ(τ), B̂0 sin θ(τ), B̂z)`.
pub fn control_field(tau: f64, c: &ControlConstants) -> [f64; 3] {
    let theta = c.theta(tau);
    [c.b0 * theta.cos(), c.b0 * theta.sin(), c.bz]
}

/// Drift part `σz¹σz² + K σz²σz³` (or `σz²σx³` in the rotated frame).
fn drift(k: f64, frame: Frame) -> Operator {
    let zz1 = pauli_product(Axis::Z, Axis::Z, Axis::I);
    let coupling3 = match frame {
        Frame::Computational => pauli_product(Axis::I, Axis::Z, Axis::Z),
        Frame::RotatedQubit3 => pauli_product(Axis::I, Axis::Z, Axis::X),
    };
    zz1 + coupling3 * Complex64::new(k, 0.0)
}

/// Full controlled Hamiltonian `Ĥ(τ)` in the requested frame.
///
/// # Errors
///
/// Rejects infeasible parameters ([`ModelParams::validate`]) and control
/// constants that break the energy constraint
/// ([`ControlConstants::validate_against`]).
pub fn hamiltonian(
    tau: f64,
    p: &ModelParams,
    c: &ControlConstants,
    frame: Frame,
) -> Result<Operator, FeasibilityError> {
    p.validate()?;
    c.validate_against(p)?;
    Ok(hamiltonian_unchecked(tau, p, c, frame))
}

/// [`hamiltonian`] without the feasibility checks, for callers that have
/// already validated `p` and `c` and need an infallible sampler.
pub(crate) fn hamiltonian_unchecked(
    tau: f64,
    p: &ModelParams,
    c: &ControlConstants,
    frame: Frame,
) -> Operator {
    let [bx, by, bz] = control_field(tau, c);
    let mut h = drift(p.k, frame);
    h += pauli_product(Axis::I, Axis::X, Axis::I) * Complex64::new(bx, 0.0);
    h += pauli_product(Axis::I, Axis::Y, Axis::I) * Complex64::new(by, 0.0);
    h += pauli_product(Axis::I, Axis::Z, Axis::I) * Complex64::new(bz, 0.0);
    h
}

/// A target gate together with its 1,3-diagonal normal form.
#[derive(Debug, Clone)]
pub struct TargetGate {
    /// Which gate this is.
    pub kind: GateKind,
    /// The gate expressed in `frame`.
    pub matrix: Operator,
    /// Diagonal form over `(q1 q3)` sectors, valid in the frame where the
    /// gate is diagonal: computational for `U_s^13`, rotated for
    /// `CNOT(1,3)`.
    pub diagonal_form: DiagonalBlock13,
    /// Frame of `matrix`.
    pub frame: Frame,
}

impl TargetGate {
    /// Frame of the chain whose evolution realizes `matrix`.
    ///
    /// The plain chain's propagator stays diagonal across sectors, so it
    /// realizes the gate in the frame where the matrix is diagonal; the
    /// rotated chain realizes it in the other frame.
    pub fn realizing_frame(&self) -> Frame {
        if self.frame == self.kind.diagonal_frame() {
            Frame::Computational
        } else {
            Frame::RotatedQubit3
        }
    }
}

/// Sector sign vector of the gate's diagonal form, ordered by
/// `(q1 q3) = (00, 01, 10, 11)`.
pub fn sector_signs(kind: GateKind) -> [f64; 4] {
    match kind {
        GateKind::Us13 => [-1.0, 1.0, 1.0, 1.0],
        GateKind::Cnot13 => [1.0, 1.0, 1.0, -1.0],
    }
}

/// Sector shifts `e_i`: eigenvalues of `σz¹ + K σz³` over `(q1 q3)`
/// sectors ordered `(00, 01, 10, 11)`.
pub(crate) fn sector_shifts(k: f64) -> [f64; 4] {
    [1.0 + k, 1.0 - k, -(1.0 - k), -(1.0 + k)]
}

/// Global phase multiplying the sign vector in the diagonal form.
fn sector_phase(kind: GateKind) -> Complex64 {
    match kind {
        GateKind::Us13 => Complex64::from_polar(1.0, FRAC_PI_4),
        GateKind::Cnot13 => Complex64::new(1.0, 0.0),
    }
}

/// Builds a target gate in the requested frame.
///
/// `U_s^13 = e^{iπ/4}·Diag(−1,1,1,1)` over `(q1 q3)` sectors in the
/// computational frame; `CNOT(1,3) = V³·Diag(1,1,1,−1)·V³` exactly, with
/// no phase prefactor.
pub fn target(kind: GateKind, frame: Frame) -> TargetGate {
    let phase = sector_phase(kind);
    let diagonal_form = DiagonalBlock13::from_real(sector_signs(kind)).scale(phase);
    let diag_matrix = diagonal_form.embed();
    let v3 = walsh_hadamard_on_qubit3();
    let matrix = match (kind, frame) {
        (GateKind::Us13, Frame::Computational) => diag_matrix,
        (GateKind::Us13, Frame::RotatedQubit3) => v3 * diag_matrix * v3,
        (GateKind::Cnot13, Frame::Computational) => v3 * diag_matrix * v3,
        (GateKind::Cnot13, Frame::RotatedQubit3) => diag_matrix,
    };
    TargetGate {
        kind,
        matrix,
        diagonal_form,
        frame,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{
        commutator, expm_hermitian, fidelity, identity, inner, is_unitary, Axis,
    };
    use approx::assert_abs_diff_eq;

    fn sample_constants() -> (ModelParams, ControlConstants) {
        let c = ControlConstants {
            b0: 1.1,
            bz: -0.7,
            omega: 2.3,
            theta0: 0.4,
            tau_star: 1.5,
        };
        (ModelParams::implied_by(0.9, &c), c)
    }

    #[test]
    fn control_field_norm_and_z_component_are_constant() {
        let (_, c) = sample_constants();
        let energy = c.energy_sq();
        for i in 0..40 {
            let tau = 0.07 * i as f64;
            let [x, y, z] = control_field(tau, &c);
            assert_abs_diff_eq!(x * x + y * y + z * z, energy, epsilon = 1e-12);
            assert_abs_diff_eq!(z, c.bz);
        }
        assert_abs_diff_eq!(control_field(0.0, &c)[1], c.b0 * c.theta0.sin());
    }

    #[test]
    fn drift_spectrum_at_equal_couplings() {
        let h = drift(1.0, Frame::Computational);
        let eig = h.symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        let expected = [-2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 2.0, 2.0];
        for (v, e) in values.iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn hamiltonian_energy_trace_is_eight_omega_hat_sq() {
        let (p, c) = sample_constants();
        for tau in [0.0, 0.3, 1.1] {
            let h = hamiltonian(tau, &p, &c, Frame::Computational).unwrap();
            let tr_h_sq = inner(&h, &h).re;
            assert_abs_diff_eq!(tr_h_sq, 8.0 * p.omega_hat * p.omega_hat, epsilon = 1e-10);
        }
    }

    #[test]
    fn hamiltonian_commutes_with_boundary_z_operators() {
        let (p, c) = sample_constants();
        let z1 = pauli_product(Axis::Z, Axis::I, Axis::I);
        let z3 = pauli_product(Axis::I, Axis::I, Axis::Z);
        let h = hamiltonian(0.8, &p, &c, Frame::Computational).unwrap();
        assert!(commutator(&h, &z1).norm() < 1e-13);
        assert!(commutator(&h, &z3).norm() < 1e-13);
    }

    #[test]
    fn rotated_hamiltonian_is_v3_conjugation() {
        let (p, c) = sample_constants();
        let v3 = walsh_hadamard_on_qubit3();
        let h = hamiltonian(0.6, &p, &c, Frame::Computational).unwrap();
        let hr = hamiltonian(0.6, &p, &c, Frame::RotatedQubit3).unwrap();
        assert!((hr - v3 * h * v3).norm() < 1e-13);
    }

    #[test]
    fn infeasible_energy_is_rejected() {
        let p = ModelParams::new(1.0, 1.2);
        assert!(matches!(
            p.validate(),
            Err(FeasibilityError::InfeasibleEnergy { .. })
        ));

        let (p_ok, mut c) = sample_constants();
        c.bz += 1e-3;
        assert!(matches!(
            c.validate_against(&p_ok),
            Err(FeasibilityError::EnergyMismatch { .. })
        ));
    }

    #[test]
    fn us13_matches_its_exponential_definition() {
        let gate = target(GateKind::Us13, Frame::Computational);
        let exponent = (pauli_product(Axis::Z, Axis::I, Axis::Z)
            + pauli_product(Axis::Z, Axis::I, Axis::I)
            + pauli_product(Axis::I, Axis::I, Axis::Z))
            * Complex64::new(std::f64::consts::FRAC_PI_4, 0.0);
        let reference = expm_hermitian(&exponent).unwrap();
        assert!((gate.matrix - reference).norm() < 1e-12);
        assert!(is_unitary(&gate.matrix));
    }

    #[test]
    fn cnot13_truth_table_and_exponential_form() {
        let gate = target(GateKind::Cnot13, Frame::Computational);
        for q1 in 0..2usize {
            for q2 in 0..2usize {
                for q3 in 0..2usize {
                    let col = 4 * q1 + 2 * q2 + q3;
                    let row = 4 * q1 + 2 * q2 + (q3 ^ q1);
                    assert_abs_diff_eq!(gate.matrix[(row, col)].re, 1.0, epsilon = 1e-12);
                    assert_abs_diff_eq!(gate.matrix[(row, col)].im, 0.0, epsilon = 1e-12);
                }
            }
        }

        let exponent = (identity() + pauli_product(Axis::Z, Axis::I, Axis::X)
            - pauli_product(Axis::Z, Axis::I, Axis::I)
            - pauli_product(Axis::I, Axis::I, Axis::X))
            * Complex64::new(std::f64::consts::FRAC_PI_4, 0.0);
        let reference = expm_hermitian(&exponent).unwrap();
        assert!((gate.matrix - reference).norm() < 1e-12);
    }

    #[test]
    fn cnot13_is_diagonal_in_rotated_frame() {
        let gate = target(GateKind::Cnot13, Frame::RotatedQubit3);
        assert!((gate.matrix - gate.diagonal_form.embed()).norm() < 1e-14);
    }

    #[test]
    fn fidelity_between_targets_vanishes() {
        let us = target(GateKind::Us13, Frame::Computational);
        let cnot = target(GateKind::Cnot13, Frame::Computational);
        assert_abs_diff_eq!(
            fidelity(&us.matrix, &cnot.matrix).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }
}
