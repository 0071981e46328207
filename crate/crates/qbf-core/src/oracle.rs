//! Direct numerical integration of the Schrödinger equation.
//!
//! Independent oracle for the closed-form propagator: steps
//! `dU/dτ = −i Ĥ(τ) U` with a unitary exponential per step, so the
//! numeric propagator stays unitary to machine precision at any step
//! count. Two schemes are available: the midpoint exponential (second
//! order) and a commutator-corrected two-node Gauss-Legendre exponential
//! (fourth order), which resolves the non-commutativity of `Ĥ` at
//! different times within a step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::{
    commutator, expm_hermitian_fast, hermiticity_deviation, identity, max_entry_deviation,
    Operator, HERMITICITY_TOL,
};

/// Smallest accepted step count.
pub const MIN_STEPS: usize = 16;

/// Deviations below this are treated as roundoff when estimating the
/// convergence order.
const MACHINE_FLOOR: f64 = 1e-13;

/// Failures of the numeric propagator.
#[derive(Debug, Clone, Error)]
pub enum OracleError {
    /// Step count below [`MIN_STEPS`].
    #[error("integration needs at least {min} steps, got {steps}")]
    TooFewSteps {
        /// Requested step count.
        steps: usize,
        /// Minimum accepted.
        min: usize,
    },
    /// Tolerance must be strictly positive.
    #[error("integration tolerance must be > 0, got {tolerance}")]
    NonPositiveTolerance {
        /// Offending value.
        tolerance: f64,
    },
    /// The supplied Hamiltonian function produced a non-Hermitian sample.
    #[error("Hamiltonian sample at τ = {tau} is not Hermitian (deviation {deviation:.3e})")]
    NonHermitianSample {
        /// Sample time.
        tau: f64,
        /// Entrywise deviation from the adjoint.
        deviation: f64,
    },
    /// Evolution times must be nonnegative.
    #[error("final time must be ≥ 0, got {tau_final}")]
    NegativeDuration {
        /// Offending value.
        tau_final: f64,
    },
}

/// Single-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// `U_{k+1} = exp(−i dτ Ĥ(τ_k + dτ/2)) U_k`, second order.
    #[serde(rename = "midpoint-exponential")]
    MidpointExponential,
    /// Two-node Gauss-Legendre exponential with the leading commutator
    /// correction, fourth order.
    #[serde(rename = "fourth-order-commutator-corrected")]
    FourthOrderCommutator,
}

/// Step count, scheme, and acceptance tolerance for a numeric propagation.
///
/// The tolerance is not used by the integrator itself; it is carried to
/// the verification layer as the acceptance threshold when oracle output
/// is compared against analytic predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    /// Number of uniform steps over the evolution interval.
    pub steps: usize,
    /// Single-step scheme.
    pub scheme: Scheme,
    /// Acceptance tolerance for downstream comparisons.
    pub tolerance: f64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            steps: 4096,
            scheme: Scheme::MidpointExponential,
            tolerance: 1e-10,
        }
    }
}

impl IntegrationSpec {
    /// Validates the step count and tolerance.
    ///
    /// # Errors
    ///
    /// [`OracleError::TooFewSteps`] and [`OracleError::NonPositiveTolerance`].
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.steps < MIN_STEPS {
            return Err(OracleError::TooFewSteps {
                steps: self.steps,
                min: MIN_STEPS,
            });
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(OracleError::NonPositiveTolerance {
                tolerance: self.tolerance,
            });
        }
        Ok(())
    }

    /// Copy with a different step count.
    fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }
}

fn sample<F>(hamiltonian: &F, tau: f64) -> Result<Operator, OracleError>
where
    F: Fn(f64) -> Operator,
{
    let h = hamiltonian(tau);
    let deviation = hermiticity_deviation(&h);
    if deviation > HERMITICITY_TOL {
        return Err(OracleError::NonHermitianSample { tau, deviation });
    }
    Ok(h)
}

/// Integrates the Schrödinger equation from `0` to `tau_final`.
///
/// The result is unitary by construction (each step is a Hermitian
/// exponential), so unitarity drift stays near machine precision even
/// for long evolutions.
///
/// # Errors
///
/// Invalid spec, negative duration, or a non-Hermitian Hamiltonian
/// sample.
pub fn propagate<F>(
    hamiltonian: F,
    tau_final: f64,
    spec: &IntegrationSpec,
) -> Result<Operator, OracleError>
where
    F: Fn(f64) -> Operator,
{
    spec.validate()?;
    if tau_final < 0.0 || !tau_final.is_finite() {
        return Err(OracleError::NegativeDuration { tau_final });
    }
    let dt = tau_final / spec.steps as f64;
    let mut u = identity();
    match spec.scheme {
        Scheme::MidpointExponential => {
            for k in 0..spec.steps {
                let t = dt * (k as f64 + 0.5);
                let h = sample(&hamiltonian, t)?;
                u = expm_hermitian_fast(&(h * complex(dt, 0.0))) * u;
            }
        }
        Scheme::FourthOrderCommutator => {
            let sqrt3 = 3.0f64.sqrt();
            let (node1, node2) = (0.5 - sqrt3 / 6.0, 0.5 + sqrt3 / 6.0);
            for k in 0..spec.steps {
                let t0 = dt * k as f64;
                let h1 = sample(&hamiltonian, t0 + node1 * dt)?;
                let h2 = sample(&hamiltonian, t0 + node2 * dt)?;
                let generator = (h1 + h2) * complex(dt / 2.0, 0.0)
                    + commutator(&h2, &h1) * complex(0.0, -sqrt3 * dt * dt / 12.0);
                u = expm_hermitian_fast(&generator) * u;
            }
        }
    }
    Ok(u)
}

fn complex(re: f64, im: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(re, im)
}

/// Empirical convergence order from propagations at `N`, `2N`, and `4N`
/// steps against an `8N`-step reference, where `N = spec.steps`.
///
/// Returns the mean of the two dyadic order estimates
/// `log2(e_N/e_2N)` and `log2(e_2N/e_4N)`. When the finest error is
/// already at roundoff the order is reported as `f64::INFINITY`.
///
/// # Errors
///
/// Same conditions as [`propagate`].
pub fn convergence_order<F>(
    hamiltonian: F,
    tau_final: f64,
    spec: &IntegrationSpec,
) -> Result<f64, OracleError>
where
    F: Fn(f64) -> Operator,
{
    spec.validate()?;
    let reference = propagate(&hamiltonian, tau_final, &spec.with_steps(8 * spec.steps))?;
    let mut errors = [0.0; 3];
    for (j, error) in errors.iter_mut().enumerate() {
        let steps = spec.steps << j;
        let u = propagate(&hamiltonian, tau_final, &spec.with_steps(steps))?;
        *error = max_entry_deviation(&u, &reference);
    }
    if errors[2] < MACHINE_FLOOR || errors[1] <= 0.0 || errors[2] <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let first = (errors[0] / errors[1]).log2();
    let second = (errors[1] / errors[2]).log2();
    Ok(0.5 * (first + second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::propagator_closed_form;
    use crate::model::{hamiltonian, target, ControlConstants, Frame, GateKind, ModelParams};
    use crate::operator::{expm_hermitian, fidelity, pauli_product, unitarity_deviation, Axis};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sample_model() -> (ModelParams, ControlConstants) {
        let c = ControlConstants {
            b0: 1.1,
            bz: 0.4,
            omega: 0.9,
            theta0: 0.7,
            tau_star: 1.3,
        };
        (ModelParams::implied_by(0.8, &c), c)
    }

    fn equal_coupling_optimum() -> (ModelParams, ControlConstants) {
        let c = ControlConstants {
            b0: (5.0f64 / 3.0).sqrt(),
            bz: 1.0 - (8.0f64 / 3.0).sqrt(),
            omega: -2.0 * (8.0f64 / 3.0).sqrt(),
            theta0: 0.0,
            tau_star: PI * (3.0f64 / 8.0).sqrt(),
        };
        (ModelParams::implied_by(1.0, &c), c)
    }

    fn model_fn(p: ModelParams, c: ControlConstants) -> impl Fn(f64) -> Operator {
        move |tau| hamiltonian(tau, &p, &c, Frame::Computational).unwrap()
    }

    #[test]
    fn constant_hamiltonian_is_integrated_exactly() {
        let h0 = pauli_product(Axis::Z, Axis::Z, Axis::I) * complex(1.0, 0.0)
            + pauli_product(Axis::I, Axis::X, Axis::I) * complex(0.8, 0.0);
        let tau = 1.7;
        let reference = expm_hermitian(&(h0 * complex(tau, 0.0))).unwrap();
        for scheme in [Scheme::MidpointExponential, Scheme::FourthOrderCommutator] {
            let spec = IntegrationSpec {
                steps: 64,
                scheme,
                ..Default::default()
            };
            let u = propagate(|_| h0, tau, &spec).unwrap();
            assert!(max_entry_deviation(&u, &reference) < 1e-12);
        }
    }

    #[test]
    fn numeric_propagator_stays_unitary() {
        let (p, c) = sample_model();
        for scheme in [Scheme::MidpointExponential, Scheme::FourthOrderCommutator] {
            let spec = IntegrationSpec {
                steps: 512,
                scheme,
                ..Default::default()
            };
            let u = propagate(model_fn(p, c), 2.4, &spec).unwrap();
            assert!(unitarity_deviation(&u) < 1e-12);
        }
    }

    #[test]
    fn fourth_order_matches_closed_form_tightly() {
        let (p, c) = sample_model();
        let spec = IntegrationSpec {
            steps: 4096,
            scheme: Scheme::FourthOrderCommutator,
            ..Default::default()
        };
        let numeric = propagate(model_fn(p, c), 1.3, &spec).unwrap();
        let analytic = propagator_closed_form(1.3, &p, &c).unwrap();
        assert!(max_entry_deviation(&numeric, &analytic) < 1e-10);
    }

    #[test]
    fn midpoint_matches_closed_form_at_default_steps() {
        let (p, c) = sample_model();
        let spec = IntegrationSpec::default();
        let numeric = propagate(model_fn(p, c), 1.3, &spec).unwrap();
        let analytic = propagator_closed_form(1.3, &p, &c).unwrap();
        assert!(max_entry_deviation(&numeric, &analytic) < 1e-6);
    }

    #[test]
    fn optimum_trajectory_reaches_the_target_numerically() {
        let (p, c) = equal_coupling_optimum();
        let gate = target(GateKind::Us13, Frame::Computational);
        let spec = IntegrationSpec {
            steps: 4096,
            scheme: Scheme::FourthOrderCommutator,
            ..Default::default()
        };
        let u = propagate(model_fn(p, c), c.tau_star, &spec).unwrap();
        let analytic = propagator_closed_form(c.tau_star, &p, &c).unwrap();
        assert!(max_entry_deviation(&u, &analytic) < 1e-8);
        assert!(fidelity(&u, &gate.matrix).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn empirical_orders_match_the_schemes() {
        let (p, c) = sample_model();
        let spec = IntegrationSpec {
            steps: 32,
            scheme: Scheme::MidpointExponential,
            ..Default::default()
        };
        let order = convergence_order(model_fn(p, c), 2.0, &spec).unwrap();
        assert!((1.8..2.2).contains(&order), "midpoint order {order}");

        let spec = IntegrationSpec {
            steps: 32,
            scheme: Scheme::FourthOrderCommutator,
            ..Default::default()
        };
        let order = convergence_order(model_fn(p, c), 2.0, &spec).unwrap();
        assert!((3.5..4.6).contains(&order), "fourth-order {order}");
    }

    #[test]
    fn convergence_order_reports_infinity_at_roundoff() {
        let h0 = pauli_product(Axis::Z, Axis::I, Axis::I);
        let spec = IntegrationSpec {
            steps: 64,
            ..Default::default()
        };
        let order = convergence_order(|_| h0, 1.0, &spec).unwrap();
        assert!(order.is_infinite());
    }

    #[test]
    fn non_hermitian_sample_is_rejected() {
        let mut bad = Operator::zeros();
        bad[(0, 1)] = complex(1.0, 0.0);
        let spec = IntegrationSpec::default();
        assert!(matches!(
            propagate(|_| bad, 1.0, &spec),
            Err(OracleError::NonHermitianSample { .. })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = IntegrationSpec {
            steps: 8,
            ..Default::default()
        };
        assert!(matches!(
            spec.validate(),
            Err(OracleError::TooFewSteps { .. })
        ));
        spec.steps = 64;
        spec.tolerance = 0.0;
        assert!(matches!(
            spec.validate(),
            Err(OracleError::NonPositiveTolerance { .. })
        ));
        assert!(matches!(
            propagate(|_| identity(), -1.0, &IntegrationSpec::default()),
            Err(OracleError::NegativeDuration { .. })
        ));
    }

    #[test]
    fn midpoint_default_error_at_the_optimum_is_small() {
        let (p, c) = equal_coupling_optimum();
        let spec = IntegrationSpec::default();
        let numeric = propagate(model_fn(p, c), c.tau_star, &spec).unwrap();
        let analytic = propagator_closed_form(c.tau_star, &p, &c).unwrap();
        let dev = max_entry_deviation(&numeric, &analytic);
        assert!(dev < 1e-6, "midpoint deviation {dev:.3e}");
        assert_abs_diff_eq!(
            fidelity(
                &numeric,
                &target(GateKind::Us13, Frame::Computational).matrix
            )
            .unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }
}
