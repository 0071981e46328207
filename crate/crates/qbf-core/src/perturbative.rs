//! Perturbative solver for nearly equal couplings at fixed fidelity.
//!
//! For `K = 1 + δK` and a requested fidelity `f = 1 − ε²/8`, the sector
//! phases pick up small defects `σ_i`, `ω_i τ* = π n_i + σ_i`, while the
//! precession stays locked, `Ω̂ τ* = 2mπ`. First-order matching fixes the
//! defects up to a branch choice `(m, sign σ1)`:
//!
//! ```text
//! σ2,3 = ½[(1 + √6/m) σ1 ∓ (3π/4) δK],   σ4 = −(3/2) σ1,
//! σ1 = ±√(2 Δ_εK / ((1 + √6/m)² + 13/2)),
//! Δ_εK = ε² − (9π²/32) δK² ≥ 0,
//! ```
//!
//! so a real branch exists only while `|δK| ≤ (16/3π)√(1−f)`, i.e. below
//! the fidelity ceiling `f_max = 1 − (3π|δK|/16)²`. The control constants
//! follow by inverting the shifted quantization conditions exactly, which
//! preserves the energy identity `ω_K² = B̂0² + B̂z²` and reduces to the
//! equal-coupling optimum at `δK = ε = 0`.
//!
//! The expansion is certified against [`root_solve_exact`], a damped
//! Newton solve of the full final-time system (precession lock plus
//! `|M| = 4f`, `P = R`, `Q/ω_K = (Ω̂/2)P`); the gap between perturbative
//! and exact constants shrinks quadratically in `(δK, ε)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use nalgebra::{Matrix3, Vector3};

use crate::boundary::{boundary_functions, IntegerProfile, SolveError};
use crate::evolution::spectral_constants;
use crate::model::{sector_shifts, ControlConstants, FeasibilityError, GateKind, ModelParams};

/// Expansion validity threshold on each phase defect.
pub const SIGMA_VALIDITY: f64 = 0.3;

/// Residual tolerance of the exact root solve.
pub const ROOT_TOL: f64 = 1e-10;

/// Iteration cap of the exact root solve.
const MAX_ITERATIONS: usize = 60;

/// Shortest duration the root solve is allowed to visit.
const MIN_TAU: f64 = 1e-3;

/// Failures of the perturbative machinery.
#[derive(Debug, Clone, Error)]
pub enum PerturbationError {
    /// Requested fidelity outside `(0, 1]`.
    #[error("fidelity must lie in (0, 1], got {fidelity}")]
    FidelityOutOfRange {
        /// Offending value.
        fidelity: f64,
    },
    /// A non-finite input.
    #[error("non-finite input: {name} = {value}")]
    NonFinite {
        /// Field name.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
    /// The detuning is too large for the requested fidelity.
    #[error(
        "no real perturbative branch: delta_K = {delta_k} cannot reach \
         f = {fidelity}; the ceiling is f_max = {f_max:.6}"
    )]
    BoundExceeded {
        /// Requested detuning `K − 1`.
        delta_k: f64,
        /// Requested fidelity.
        fidelity: f64,
        /// Reachable ceiling `1 − (3π|δK|/16)²`.
        f_max: f64,
    },
    /// The branch requires a nonzero precession winding.
    #[error("perturbative branch requires m != 0")]
    ZeroPrecessionWinding,
    /// Quantization inversion produced a non-positive duration.
    #[error("quantization inversion failed: tau^2 = {tau_sq:.3e}")]
    InversionFailed {
        /// Offending squared duration.
        tau_sq: f64,
    },
    /// The root solve could not evaluate its initial guess.
    #[error("initial guess is not evaluable (tau = {tau})")]
    BadSeed {
        /// Seed duration.
        tau: f64,
    },
    /// The root solve stalled before reaching tolerance.
    #[error(
        "root solve did not converge after {iterations} iterations; \
         best residual {best_residual:.3e}"
    )]
    NonConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Smallest residual norm reached.
        best_residual: f64,
    },
    /// An invalid integer profile was supplied.
    #[error(transparent)]
    Profile(#[from] SolveError),
    /// Parameters or constants failed a feasibility check.
    #[error(transparent)]
    Infeasible(#[from] FeasibilityError),
}

/// Detuning and fidelity defining a perturbative problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationInputs {
    /// Coupling detuning `δK = K − 1`.
    pub delta_k: f64,
    /// Requested fidelity `f ∈ (0, 1]`.
    pub fidelity: f64,
    /// Fidelity defect scale `ε = √(8(1 − f))`.
    pub epsilon: f64,
}

impl PerturbationInputs {
    /// Builds inputs from the detuning and requested fidelity.
    ///
    /// # Errors
    ///
    /// Non-finite inputs or a fidelity outside `(0, 1]`.
    pub fn new(delta_k: f64, fidelity: f64) -> Result<Self, PerturbationError> {
        for (name, value) in [("delta_K", delta_k), ("fidelity", fidelity)] {
            if !value.is_finite() {
                return Err(PerturbationError::NonFinite { name, value });
            }
        }
        if !(fidelity > 0.0 && fidelity <= 1.0) {
            return Err(PerturbationError::FidelityOutOfRange { fidelity });
        }
        Ok(Self {
            delta_k,
            fidelity,
            epsilon: (8.0 * (1.0 - fidelity)).sqrt(),
        })
    }

    /// Branch discriminant `Δ_εK = ε² − (9π²/32) δK²`.
    pub fn discriminant(&self) -> f64 {
        self.epsilon * self.epsilon - 9.0 * PI * PI / 32.0 * self.delta_k * self.delta_k
    }

    /// Checks that a real perturbative branch exists.
    ///
    /// # Errors
    ///
    /// [`PerturbationError::BoundExceeded`] when `Δ_εK < 0`, quoting the
    /// reachable fidelity ceiling.
    pub fn validate_bound(&self) -> Result<(), PerturbationError> {
        if self.discriminant() < 0.0 {
            return Err(PerturbationError::BoundExceeded {
                delta_k: self.delta_k,
                fidelity: self.fidelity,
                f_max: fidelity_ceiling(self.delta_k),
            });
        }
        Ok(())
    }
}

/// Largest fidelity reachable at detuning `δK`:
/// `f_max = 1 − (3π|δK|/16)²`, clamped to `[0, 1]`.
pub fn fidelity_ceiling(delta_k: f64) -> f64 {
    let bound = 3.0 * PI * delta_k.abs() / 16.0;
    (1.0 - bound * bound).clamp(0.0, 1.0)
}

/// Phase defects `σ_i` of the shifted quantization conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaVector {
    /// Defects `σ1..σ4`, ordered like the sector windings.
    pub sigma: [f64; 4],
}

impl SigmaVector {
    /// `Σ σ_i²`, which equals `ε²` for a solved branch.
    pub fn norm_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    /// `true` while every defect stays below [`SIGMA_VALIDITY`], the
    /// declared validity region of the first-order expansion.
    pub fn within_validity(&self) -> bool {
        self.sigma.iter().all(|s| s.abs() < SIGMA_VALIDITY)
    }

    fn reversed(&self) -> Self {
        let [s1, s2, s3, s4] = self.sigma;
        Self {
            sigma: [s4, s3, s2, s1],
        }
    }
}

/// Solves the first-order defect system on the branch `(m, sign σ1)`.
///
/// Only the sign of `sign_sigma1` is used. The returned vector satisfies
/// `Σ σ_i² = ε²` identically.
///
/// # Errors
///
/// `m = 0`, or a detuning beyond the fidelity ceiling.
pub fn solve_sigmas(
    inp: &PerturbationInputs,
    m: i32,
    sign_sigma1: f64,
) -> Result<SigmaVector, PerturbationError> {
    if m == 0 {
        return Err(PerturbationError::ZeroPrecessionWinding);
    }
    inp.validate_bound()?;
    let ratio = 1.0 + 6.0f64.sqrt() / f64::from(m);
    let denom = 13.0 / 4.0 + ratio * ratio / 2.0;
    let sigma1 = sign_sigma1.signum() * (inp.discriminant() / denom).sqrt();
    let skew = 0.75 * PI * inp.delta_k;
    Ok(SigmaVector {
        sigma: [
            sigma1,
            0.5 * (ratio * sigma1 - skew),
            0.5 * (ratio * sigma1 + skew),
            -1.5 * sigma1,
        ],
    })
}

/// A perturbative solution branch: seed constants plus diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeSolution {
    /// Integer profile of the branch.
    pub profile: IntegerProfile,
    /// Control constants from the exact quantization inversion.
    pub constants: ControlConstants,
    /// Required transverse energy `ω_K² = B̂0² + B̂z²`.
    pub omega_k_sq: f64,
    /// Phase defects of the branch.
    pub sigma: SigmaVector,
    /// Effective detuning `δ_εK` of the canonical branch, a duration
    /// diagnostic: `τ* ≈ π√(3/8)(1 − δ_εK/2)`.
    pub delta_eps_k: f64,
    /// Fidelity ceiling at this detuning.
    pub f_max: f64,
}

fn canonical_m(target_kind: GateKind) -> i32 {
    match target_kind {
        GateKind::Us13 => 1,
        GateKind::Cnot13 => -1,
    }
}

/// Perturbative constants on the canonical branch: `m = 1`, `sign σ1 = +`
/// for `U_s^13`, and the sign-flipped `m = −1` branch for `CNOT(1,3)`.
///
/// # Errors
///
/// Same conditions as [`optimal_constants_with_branch`].
pub fn optimal_constants(
    inp: &PerturbationInputs,
    target_kind: GateKind,
) -> Result<PerturbativeSolution, PerturbationError> {
    optimal_constants_with_branch(inp, target_kind, canonical_m(target_kind), 1.0)
}

/// Perturbative constants on an explicit branch `(m, sign σ1)`.
///
/// The sector windings stay at their minimal profile; the defects solve
/// the first-order system, and the constants invert the shifted
/// quantization conditions exactly:
///
/// ```text
/// u_i = (π n_i + σ_i)²,
/// τ*² = [(u1 + u4) − (u2 + u3)] / (8K),
/// β   = [(u1 − u4) + (u2 − u3)] / (8τ*²),
/// B̂0² = Σu / (4τ*²) − β² − (1 + K²),
/// B̂z  = β + mπ/τ*,   Ω̂ = 2mπ/τ*.
/// ```
///
/// # Errors
///
/// Invalid inputs, a detuning beyond the ceiling, `m = 0`, or a
/// degenerate inversion.
pub fn optimal_constants_with_branch(
    inp: &PerturbationInputs,
    target_kind: GateKind,
    m: i32,
    sign_sigma1: f64,
) -> Result<PerturbativeSolution, PerturbationError> {
    let (profile, sigma) = match target_kind {
        GateKind::Us13 => (
            IntegerProfile::new([2, 1, 1, 1], m, target_kind)?,
            solve_sigmas(inp, m, sign_sigma1)?,
        ),
        GateKind::Cnot13 => (
            IntegerProfile::new([1, 1, 1, 2], m, target_kind)?,
            solve_sigmas(inp, -m, sign_sigma1)?.reversed(),
        ),
    };
    let k = 1.0 + inp.delta_k;
    let constants = invert_quantization(&profile, &sigma, k)?;
    let scale = (inp.discriminant() / (27.0 + 4.0 * 6.0f64.sqrt())).sqrt();
    Ok(PerturbativeSolution {
        profile,
        constants,
        omega_k_sq: constants.energy_sq(),
        sigma,
        delta_eps_k: inp.delta_k + 2.0 * (1.0 + 2.0 * 6.0f64.sqrt()) / (3.0 * PI) * scale,
        f_max: fidelity_ceiling(inp.delta_k),
    })
}

fn invert_quantization(
    profile: &IntegerProfile,
    sigma: &SigmaVector,
    k: f64,
) -> Result<ControlConstants, PerturbationError> {
    let mut u = [0.0; 4];
    for ((slot, &n), &s) in u.iter_mut().zip(&profile.n).zip(&sigma.sigma) {
        let phase = PI * f64::from(n) + s;
        *slot = phase * phase;
    }
    let tau_sq = ((u[0] + u[3]) - (u[1] + u[2])) / (8.0 * k);
    if !tau_sq.is_finite() || tau_sq <= 0.0 {
        return Err(PerturbationError::InversionFailed { tau_sq });
    }
    let tau = tau_sq.sqrt();
    let beta = ((u[0] - u[3]) + (u[1] - u[2])) / (8.0 * tau_sq);
    let b0_sq = u.iter().sum::<f64>() / (4.0 * tau_sq) - beta * beta - (1.0 + k * k);
    if b0_sq < 0.0 {
        return Err(PerturbationError::InversionFailed { tau_sq: b0_sq });
    }
    let half_precession = f64::from(profile.m) * PI / tau;
    Ok(ControlConstants {
        b0: b0_sq.sqrt(),
        bz: beta + half_precession,
        omega: 2.0 * half_precession,
        theta0: 0.0,
        tau_star: tau,
    })
}

/// Residuals of the squared quantization conditions,
/// `(ω_K τ)² + 2(ω_K τ) sinφ A_i + A_i² − (π n_i + σ_i)²` with
/// `A_i = e_i τ − mπ`; all four vanish at a consistent solution.
pub fn transcendental_residuals(
    c: &ControlConstants,
    p: &ModelParams,
    profile: &IntegerProfile,
    sigma: &SigmaVector,
) -> [f64; 4] {
    let omega_k = c.energy_sq().sqrt();
    let sin_phi = if omega_k > 0.0 { c.bz / omega_k } else { 0.0 };
    let shifts = sector_shifts(p.k);
    let tau = c.tau_star;
    let radial = omega_k * tau;
    let mut out = [0.0; 4];
    for i in 0..4 {
        let a = shifts[i] * tau - f64::from(profile.m) * PI;
        let phase = PI * f64::from(profile.n[i]) + sigma.sigma[i];
        out[i] = radial * radial + 2.0 * radial * sin_phi * a + a * a - phase * phase;
    }
    out
}

/// Converged root of the exact final-time system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSolution {
    /// Root constants, with `Ω̂ = 2mπ/τ*` locked.
    pub constants: ControlConstants,
    /// Transverse energy at the root.
    pub omega_k_sq: f64,
    /// Phase defects measured at the root, `σ_i = ω_i τ* − π n_i`.
    pub sigma: SigmaVector,
    /// Newton iterations used.
    pub iterations: usize,
    /// Residual norm at acceptance.
    pub residual_norm: f64,
}

fn system_residuals(
    x: &[f64; 3],
    k: f64,
    m: i32,
    fidelity: f64,
    kind: GateKind,
) -> Option<[f64; 3]> {
    let [tau, bz, b0] = *x;
    if !tau.is_finite() || tau <= MIN_TAU || !bz.is_finite() || !b0.is_finite() {
        return None;
    }
    let omega = 2.0 * f64::from(m) * PI / tau;
    let c = ControlConstants {
        b0,
        bz,
        omega,
        theta0: 0.0,
        tau_star: tau,
    };
    let p = ModelParams::implied_by(k, &c);
    let sc = spectral_constants(&p, &c).ok()?;
    let tp = sc.trig_profile(tau);
    let bf = boundary_functions(&sc, &tp, kind);
    Some([
        bf.m.abs() - 4.0 * fidelity,
        bf.p - bf.r,
        bf.q / sc.omega_k - 0.5 * omega * bf.p,
    ])
}

fn norm_inf(f: &[f64; 3]) -> f64 {
    f.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Solves the exact final-time system by damped Newton iteration with
/// `Ω̂τ = 2mπ` eliminated, starting from a perturbative seed.
///
/// The unknowns are `(τ, B̂z, B̂0)` and the equations are `|M| = 4f`,
/// `P = R`, and `Q/ω_K = (Ω̂/2)P`. The converged constants reproduce the
/// requested fidelity exactly and serve as ground truth for the
/// perturbative expansion.
///
/// # Errors
///
/// Invalid profile or fidelity, an unevaluable seed, or stalling before
/// [`ROOT_TOL`]; non-convergence reports the best residual reached.
pub fn root_solve_exact(
    p: &ModelParams,
    profile: &IntegerProfile,
    fidelity: f64,
    initial: &ControlConstants,
) -> Result<RootSolution, PerturbationError> {
    profile.validate()?;
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(PerturbationError::FidelityOutOfRange { fidelity });
    }
    let (k, m, kind) = (p.k, profile.m, profile.target_kind);
    let mut x = [initial.tau_star, initial.bz, initial.b0];
    let mut f = system_residuals(&x, k, m, fidelity, kind).ok_or(PerturbationError::BadSeed {
        tau: initial.tau_star,
    })?;
    let mut best = norm_inf(&f);
    for iteration in 0..MAX_ITERATIONS {
        let norm = norm_inf(&f);
        best = best.min(norm);
        if norm <= ROOT_TOL {
            return finish_root(&x, k, m, profile, norm, iteration);
        }
        let jacobian = numeric_jacobian(&x, k, m, fidelity, kind).ok_or(
            PerturbationError::NonConvergence {
                iterations: iteration,
                best_residual: best,
            },
        )?;
        let rhs = Vector3::new(-f[0], -f[1], -f[2]);
        let Some(direction) = jacobian.lu().solve(&rhs) else {
            return Err(PerturbationError::NonConvergence {
                iterations: iteration,
                best_residual: best,
            });
        };
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..12 {
            let candidate = [
                x[0] + step * direction[0],
                x[1] + step * direction[1],
                x[2] + step * direction[2],
            ];
            if let Some(f_new) = system_residuals(&candidate, k, m, fidelity, kind) {
                if norm_inf(&f_new) < norm {
                    x = candidate;
                    f = f_new;
                    advanced = true;
                    break;
                }
            }
            step /= 2.0;
        }
        if !advanced {
            return Err(PerturbationError::NonConvergence {
                iterations: iteration,
                best_residual: best,
            });
        }
    }
    Err(PerturbationError::NonConvergence {
        iterations: MAX_ITERATIONS,
        best_residual: best,
    })
}

fn numeric_jacobian(
    x: &[f64; 3],
    k: f64,
    m: i32,
    fidelity: f64,
    kind: GateKind,
) -> Option<Matrix3<f64>> {
    let mut jacobian = Matrix3::zeros();
    for j in 0..3 {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += h;
        minus[j] -= h;
        let fp = system_residuals(&plus, k, m, fidelity, kind)?;
        let fm = system_residuals(&minus, k, m, fidelity, kind)?;
        for i in 0..3 {
            jacobian[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Some(jacobian)
}

fn finish_root(
    x: &[f64; 3],
    k: f64,
    m: i32,
    profile: &IntegerProfile,
    residual_norm: f64,
    iterations: usize,
) -> Result<RootSolution, PerturbationError> {
    let constants = ControlConstants {
        b0: x[2].abs(),
        bz: x[1],
        omega: 2.0 * f64::from(m) * PI / x[0],
        theta0: 0.0,
        tau_star: x[0],
    };
    let params = ModelParams::implied_by(k, &constants);
    let sc = spectral_constants(&params, &constants)?;
    let mut sigma = [0.0; 4];
    for ((slot, &w), &n) in sigma.iter_mut().zip(&sc.omega).zip(&profile.n) {
        *slot = w * constants.tau_star - PI * f64::from(n);
    }
    Ok(RootSolution {
        constants,
        omega_k_sq: constants.energy_sq(),
        sigma: SigmaVector { sigma },
        iterations,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sqrt6() -> f64 {
        6.0f64.sqrt()
    }

    #[test]
    fn ceiling_matches_molecule_scales() {
        assert_abs_diff_eq!(fidelity_ceiling(0.0), 1.0);
        assert!((fidelity_ceiling(0.125) - 0.9946).abs() < 5e-4);
        assert!((fidelity_ceiling(0.195) - 0.9868).abs() < 5e-4);
        assert!((fidelity_ceiling(0.35) - 0.9575).abs() < 5e-4);
        assert!((fidelity_ceiling(-0.35) - 0.9575).abs() < 5e-4);
        assert_abs_diff_eq!(fidelity_ceiling(10.0), 0.0);
    }

    #[test]
    fn inputs_validate_fidelity_and_bound() {
        assert!(matches!(
            PerturbationInputs::new(0.0, 0.0),
            Err(PerturbationError::FidelityOutOfRange { .. })
        ));
        assert!(matches!(
            PerturbationInputs::new(0.0, 1.2),
            Err(PerturbationError::FidelityOutOfRange { .. })
        ));
        let inp = PerturbationInputs::new(0.01, 0.999).unwrap();
        assert_abs_diff_eq!(inp.epsilon * inp.epsilon, 8.0 * 0.001, epsilon = 1e-15);
        assert!(inp.validate_bound().is_ok());

        let tight = PerturbationInputs::new(0.06, 0.999).unwrap();
        match tight.validate_bound().unwrap_err() {
            PerturbationError::BoundExceeded { f_max, .. } => {
                assert_abs_diff_eq!(f_max, fidelity_ceiling(0.06), epsilon = 1e-15);
            }
            other => panic!("expected BoundExceeded, got {other:?}"),
        }
    }

    #[test]
    fn sigmas_vanish_at_equal_couplings_and_unit_fidelity() {
        let inp = PerturbationInputs::new(0.0, 1.0).unwrap();
        let sigma = solve_sigmas(&inp, 1, 1.0).unwrap();
        for s in sigma.sigma {
            assert_abs_diff_eq!(s, 0.0);
        }
        assert!(sigma.within_validity());
    }

    #[test]
    fn sigma_closed_form_at_zero_detuning() {
        let inp = PerturbationInputs::new(0.0, 0.995).unwrap();
        let sigma = solve_sigmas(&inp, 1, 1.0).unwrap();
        let expected = inp.epsilon * (2.0 / ((1.0 + sqrt6()).powi(2) + 13.0 / 2.0)).sqrt();
        assert_abs_diff_eq!(sigma.sigma[0], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(sigma.sigma[3], -1.5 * expected, epsilon = 1e-14);
        assert_abs_diff_eq!(sigma.sigma[1], sigma.sigma[2], epsilon = 1e-14);
    }

    #[test]
    fn degenerate_discriminant_leaves_only_skew() {
        let delta_k = 0.02;
        let eps_sq = 9.0 * PI * PI / 32.0 * delta_k * delta_k * (1.0 + 1e-9);
        let inp = PerturbationInputs::new(delta_k, 1.0 - eps_sq / 8.0).unwrap();
        let sigma = solve_sigmas(&inp, 1, 1.0).unwrap();
        assert!(sigma.sigma[0].abs() < 1e-5);
        assert_abs_diff_eq!(sigma.sigma[1], -3.0 * PI / 8.0 * delta_k, epsilon = 3e-5);
        assert_abs_diff_eq!(sigma.sigma[2], 3.0 * PI / 8.0 * delta_k, epsilon = 3e-5);
    }

    #[test]
    fn sigma_norm_equals_epsilon_sq() {
        for (delta_k, fidelity) in [(0.0, 0.999), (0.01, 0.999), (0.02, 0.998), (-0.01, 0.9995)] {
            let inp = PerturbationInputs::new(delta_k, fidelity).unwrap();
            for (m, sign) in [(1, 1.0), (1, -1.0), (-1, 1.0), (2, 1.0)] {
                let sigma = solve_sigmas(&inp, m, sign).unwrap();
                assert_abs_diff_eq!(sigma.norm_sq(), inp.epsilon * inp.epsilon, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn detuning_skew_matches_winding_asymmetry() {
        for kind in [GateKind::Us13, GateKind::Cnot13] {
            let inp = PerturbationInputs::new(0.02, 0.999).unwrap();
            let solution = optimal_constants(&inp, kind).unwrap();
            let n = solution.profile.n;
            let lhs = f64::from(n[1]) * (solution.sigma.sigma[1] - solution.sigma.sigma[2]);
            let rhs = -PI / 4.0
                * f64::from(
                    i32::try_from(n[0] * n[0]).unwrap() - i32::try_from(n[3] * n[3]).unwrap(),
                )
                * inp.delta_k;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn equal_coupling_limit_is_exact() {
        let inp = PerturbationInputs::new(0.0, 1.0).unwrap();
        let us = optimal_constants(&inp, GateKind::Us13).unwrap();
        let root_83 = (8.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(
            us.constants.tau_star,
            PI * (3.0f64 / 8.0).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(us.constants.bz, 1.0 + root_83, epsilon = 1e-12);
        assert_abs_diff_eq!(us.constants.b0, (5.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(us.constants.omega, 2.0 * root_83, epsilon = 1e-12);
        assert_abs_diff_eq!(us.omega_k_sq, 16.0 / 3.0 + 2.0 * root_83, epsilon = 1e-12);
        assert_abs_diff_eq!(us.delta_eps_k, 0.0);

        let cnot = optimal_constants(&inp, GateKind::Cnot13).unwrap();
        assert_abs_diff_eq!(cnot.constants.bz, -us.constants.bz, epsilon = 1e-12);
        assert_abs_diff_eq!(cnot.constants.omega, -us.constants.omega, epsilon = 1e-12);
        assert_abs_diff_eq!(
            cnot.constants.tau_star,
            us.constants.tau_star,
            epsilon = 1e-12
        );
        assert_eq!(cnot.profile.n, [1, 1, 1, 2]);
        assert_eq!(cnot.profile.m, -1);
    }

    #[test]
    fn duration_decreases_with_effective_detuning() {
        let f = 0.999;
        let tau_at = |delta_k: f64| {
            let inp = PerturbationInputs::new(delta_k, f).unwrap();
            optimal_constants(&inp, GateKind::Us13)
                .unwrap()
                .constants
                .tau_star
        };
        assert!(tau_at(0.02) < tau_at(0.01));
        assert!(tau_at(0.01) < tau_at(0.0));

        let tau_eps = |fidelity: f64| {
            let inp = PerturbationInputs::new(0.0, fidelity).unwrap();
            optimal_constants(&inp, GateKind::Us13)
                .unwrap()
                .constants
                .tau_star
        };
        assert!(tau_eps(0.995) < tau_eps(0.999));
        assert!(tau_eps(0.999) < tau_eps(1.0));
    }

    #[test]
    fn closed_form_duration_matches_inversion() {
        for (delta_k, fidelity) in [(0.01, 0.999), (0.02, 0.998), (0.0, 0.995)] {
            let inp = PerturbationInputs::new(delta_k, fidelity).unwrap();
            let solution = optimal_constants(&inp, GateKind::Us13).unwrap();
            let closed = PI * (3.0f64 / 8.0).sqrt() * (1.0 - solution.delta_eps_k / 2.0);
            assert!(
                (solution.constants.tau_star - closed).abs() < 5e-3,
                "inversion {} vs closed form {closed}",
                solution.constants.tau_star
            );
        }
    }

    #[test]
    fn transcendental_residuals_vanish_on_consistent_solutions() {
        let inp = PerturbationInputs::new(0.0, 1.0).unwrap();
        let solution = optimal_constants(&inp, GateKind::Us13).unwrap();
        let p = ModelParams::implied_by(1.0, &solution.constants);
        let residuals =
            transcendental_residuals(&solution.constants, &p, &solution.profile, &solution.sigma);
        for r in residuals {
            assert!(r.abs() < 1e-9, "residual {r}");
        }
    }

    #[test]
    fn transcendental_residuals_scale_with_truncation() {
        let inp = PerturbationInputs::new(0.02, 0.9995).unwrap();
        let solution = optimal_constants(&inp, GateKind::Us13).unwrap();
        let p = ModelParams::implied_by(1.0 + inp.delta_k, &solution.constants);
        let residuals =
            transcendental_residuals(&solution.constants, &p, &solution.profile, &solution.sigma);
        let max = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        assert!(max > 1e-9, "expected generic nonzero residuals");
        assert!(max < 0.1, "truncation error unexpectedly large: {max}");
    }

    #[test]
    fn root_solve_accepts_the_exact_fixed_point() {
        let inp = PerturbationInputs::new(0.0, 1.0).unwrap();
        let seed = optimal_constants(&inp, GateKind::Us13).unwrap();
        let p = ModelParams::implied_by(1.0, &seed.constants);
        let root = root_solve_exact(&p, &seed.profile, 1.0, &seed.constants).unwrap();
        assert_eq!(root.iterations, 0);
        assert!(root.residual_norm <= ROOT_TOL);
        assert_abs_diff_eq!(
            root.constants.tau_star,
            seed.constants.tau_star,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(root.constants.bz, seed.constants.bz, epsilon = 1e-12);
    }

    #[test]
    fn root_matches_frozen_oracle_values() {
        let anchors = [
            (0.01, 0.999, 1.896003, 2.702672, 1.319492),
            (0.02, 0.998, 1.878954, 2.739325, 1.335432),
            (-0.01, 0.999, 1.915064, 2.675759, 1.306356),
            (0.005, 0.9995, 1.906174, 2.679407, 1.309667),
        ];
        for (delta_k, fidelity, tau, bz, b0) in anchors {
            let inp = PerturbationInputs::new(delta_k, fidelity).unwrap();
            let seed = optimal_constants(&inp, GateKind::Us13).unwrap();
            let p = ModelParams::implied_by(1.0 + delta_k, &seed.constants);
            let root = root_solve_exact(&p, &seed.profile, fidelity, &seed.constants).unwrap();
            assert!(root.residual_norm <= ROOT_TOL);
            assert_abs_diff_eq!(root.constants.tau_star, tau, epsilon = 2e-6);
            assert_abs_diff_eq!(root.constants.bz, bz, epsilon = 2e-6);
            assert_abs_diff_eq!(root.constants.b0, b0, epsilon = 2e-6);
        }
    }

    #[test]
    fn seed_to_root_gap_is_second_order() {
        for (delta_k, fidelity) in [(0.01, 0.999), (0.02, 0.998), (0.05, 0.999)] {
            let inp = PerturbationInputs::new(delta_k, fidelity).unwrap();
            let seed = optimal_constants(&inp, GateKind::Us13).unwrap();
            let p = ModelParams::implied_by(1.0 + delta_k, &seed.constants);
            let root = root_solve_exact(&p, &seed.profile, fidelity, &seed.constants).unwrap();
            let scale = delta_k * delta_k + inp.epsilon * inp.epsilon;
            let c = seed.constants;
            let r = root.constants;
            assert!(
                (c.tau_star - r.tau_star).abs() <= scale,
                "tau gap {} vs scale {scale}",
                (c.tau_star - r.tau_star).abs()
            );
            assert!((c.bz - r.bz).abs() <= scale);
            assert!((c.b0 - r.b0).abs() <= scale);
        }
    }

    #[test]
    fn cnot_root_is_the_flipped_us_root() {
        let inp = PerturbationInputs::new(0.01, 0.999).unwrap();
        let us_seed = optimal_constants(&inp, GateKind::Us13).unwrap();
        let cnot_seed = optimal_constants(&inp, GateKind::Cnot13).unwrap();
        let p = ModelParams::implied_by(1.01, &us_seed.constants);
        let us_root = root_solve_exact(&p, &us_seed.profile, 0.999, &us_seed.constants).unwrap();
        let p_cnot = ModelParams::implied_by(1.01, &cnot_seed.constants);
        let cnot_root =
            root_solve_exact(&p_cnot, &cnot_seed.profile, 0.999, &cnot_seed.constants).unwrap();
        assert_abs_diff_eq!(
            cnot_root.constants.tau_star,
            us_root.constants.tau_star,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            cnot_root.constants.bz,
            -us_root.constants.bz,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(cnot_root.constants.b0, us_root.constants.b0, epsilon = 1e-9);
    }

    #[test]
    fn override_branch_also_converges() {
        let inp = PerturbationInputs::new(0.01, 0.999).unwrap();
        let seed = optimal_constants_with_branch(&inp, GateKind::Us13, -1, 1.0).unwrap();
        assert!(seed.constants.bz < 0.0);
        let p = ModelParams::implied_by(1.01, &seed.constants);
        let root = root_solve_exact(&p, &seed.profile, 0.999, &seed.constants).unwrap();
        assert!(root.residual_norm <= ROOT_TOL);
        assert!(root.constants.bz < 0.0);
    }

    #[test]
    fn bad_seeds_are_rejected() {
        let inp = PerturbationInputs::new(0.01, 0.999).unwrap();
        let seed = optimal_constants(&inp, GateKind::Us13).unwrap();
        let p = ModelParams::implied_by(1.01, &seed.constants);
        let mut broken = seed.constants;
        broken.tau_star = -1.0;
        assert!(matches!(
            root_solve_exact(&p, &seed.profile, 0.999, &broken),
            Err(PerturbationError::BadSeed { .. })
        ));
        assert!(matches!(
            root_solve_exact(&p, &seed.profile, 0.0, &seed.constants),
            Err(PerturbationError::FidelityOutOfRange { .. })
        ));
    }
}
