//! Solver reports and their serialized forms.
//!
//! JSON is the canonical machine format; CSV is provided for parameter
//! sweeps and field traces. Physical couplings are quoted in Hz without a
//! universal convention for the rescaling `τ = J12 t`, so every physical
//! duration is reported under both readings: `J12` taken as an angular
//! frequency (`T = τ*/(2π·J12_Hz)`) and as a plain frequency
//! (`T = τ*/J12_Hz`).

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::boundary::{IntegerProfile, RESIDUAL_TOL};
use crate::model::{ControlConstants, GateKind, ModelParams, ENERGY_TOL};
use crate::oracle::IntegrationSpec;

/// Tolerance on the gap between analytic and numeric-oracle fidelity.
pub const ORACLE_GAP_TOL: f64 = 1e-8;

/// Tolerance on the achieved fidelity relative to the requested one.
pub const FIDELITY_TOL: f64 = 1e-8;

/// Tolerance on the conserved-field drifts `B̂z(τ)` and `B̂x² + B̂y²`,
/// which vanish identically for the optimal control law.
pub const CONSERVED_TOL: f64 = 1e-12;

/// Physical duration of a protocol under both Hz conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalTime {
    /// Coupling `J12` in Hz.
    pub j12_hz: f64,
    /// `T = τ*/(2π·J12_Hz)`, reading `J12` as an angular frequency.
    pub seconds_angular_convention: f64,
    /// `T = τ*/J12_Hz`, reading `J12` as a plain frequency.
    pub seconds_plain_convention: f64,
    /// Human-readable statement of the two conventions.
    pub note: String,
}

impl PhysicalTime {
    /// Converts a rescaled duration `τ*` using a positive coupling in Hz.
    pub fn from_tau(tau_star: f64, j12_hz: f64) -> Self {
        Self {
            j12_hz,
            seconds_angular_convention: tau_star / (TAU * j12_hz),
            seconds_plain_convention: tau_star / j12_hz,
            note: "angular: T = tau*/(2*pi*J12_Hz); plain: T = tau*/J12_Hz".to_string(),
        }
    }
}

/// Full verification record for one set of control constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Gate the constants were solved for.
    pub target: GateKind,
    /// Model parameters the constants were verified against.
    pub params: ModelParams,
    /// Integer profile, when the constants come from the exact solver.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<IntegerProfile>,
    /// The control constants under test.
    pub constants: ControlConstants,
    /// Transverse energy `ω_K²` of the solution.
    pub omega_k_sq: f64,
    /// Fidelity the solver was asked for.
    pub requested_fidelity: f64,
    /// Fidelity of the closed-form propagator against the target.
    pub analytic_fidelity: f64,
    /// Fidelity of the numerically integrated propagator.
    pub oracle_fidelity: f64,
    /// `|analytic_fidelity − oracle_fidelity|`.
    pub fidelity_gap: f64,
    /// Final-time residuals `(Ω̂τ* mod 2π, |M|−4f, P−R, Q/ω_K−(Ω̂/2)P)`.
    pub boundary_residuals: [f64; 4],
    /// `|B̂0² + B̂z² − ω_K²|` against the stated parameter budget.
    pub energy_residual: f64,
    /// Largest `|B̂z(τ) − B̂z|` along the trajectory.
    pub bz_drift: f64,
    /// Largest `|B̂x²(τ) + B̂y²(τ) − B̂0²|` along the trajectory.
    pub transverse_drift: f64,
    /// Numeric-oracle settings used for the verification.
    pub integration: IntegrationSpec,
    /// Whether the constants satisfy the stated energy budget.
    pub feasible: bool,
    /// Physical duration, when the parameters carry a coupling in Hz.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub physical_time: Option<PhysicalTime>,
}

impl SolveReport {
    /// Largest of the four final-time boundary residuals in magnitude.
    pub fn max_boundary_residual(&self) -> f64 {
        self.boundary_residuals
            .iter()
            .fold(0.0, |acc, r| acc.max(r.abs()))
    }

    /// Names of every check that exceeds its tolerance.
    pub fn failures(&self) -> Vec<&'static str> {
        let names = ["omega-tau-lock", "trace-match", "p-minus-r", "q-minus-p"];
        let mut out = Vec::new();
        for (name, r) in names.iter().zip(self.boundary_residuals) {
            if r.abs() > RESIDUAL_TOL {
                out.push(*name);
            }
        }
        if self.analytic_fidelity < self.requested_fidelity - FIDELITY_TOL {
            out.push("fidelity-below-request");
        }
        if self.fidelity_gap > ORACLE_GAP_TOL {
            out.push("oracle-gap");
        }
        if self.energy_residual > ENERGY_TOL {
            out.push("energy");
        }
        if self.bz_drift > CONSERVED_TOL {
            out.push("bz-drift");
        }
        if self.transverse_drift > CONSERVED_TOL {
            out.push("transverse-drift");
        }
        out
    }

    /// `true` when every residual and fidelity check passes.
    pub fn within_tolerances(&self) -> bool {
        self.failures().is_empty()
    }

    /// Canonical JSON form; reparsing and reserializing is byte-identical.
    ///
    /// # Errors
    ///
    /// Propagates serializer failures, which cannot occur for the field
    /// types used here.
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Parses a report from its JSON form.
    ///
    /// # Errors
    ///
    /// Returns the underlying parse error for malformed input.
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// One row of a coupling-ratio sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Coupling ratio `K`.
    pub k: f64,
    /// Perturbative duration, absent outside the validity bound.
    pub tau_perturbative: Option<f64>,
    /// Exact-root duration, absent when the root solve is skipped.
    pub tau_exact: Option<f64>,
    /// Feasibility frontier `f_max(K) = 1 − (3π|K−1|/16)²`.
    pub f_max: f64,
    /// Whether the requested fidelity is reachable at this `K`.
    pub feasible: bool,
}

/// One row of a control-field trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Evolution time `τ`.
    pub tau: f64,
    /// Transverse field component `B̂x(τ)`.
    pub bx: f64,
    /// Transverse field component `B̂y(τ)`.
    pub by: f64,
    /// Longitudinal field component `B̂z(τ)`.
    pub bz: f64,
    /// Fidelity of `U_opt(τ)` against the target.
    pub fidelity: f64,
}

fn optional_field(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders sweep rows as CSV with a header line.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,tau_perturbative,tau_exact,f_max,feasible\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k,
            optional_field(row.tau_perturbative),
            optional_field(row.tau_exact),
            row.f_max,
            row.feasible
        ));
    }
    out
}

/// Renders field-trace rows as CSV with a header line.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("tau,bx,by,bz,fidelity\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.tau, row.bx, row.by, row.bz, row.fidelity
        ));
    }
    out
}
