//! Brute-force minimality certification and fidelity-landscape traces.
//!
//! The scan sweeps the optimal control family itself: a constant `B̂z`
//! with a transverse component precessing at `Ω̂`, the amplitudes tied to
//! the energy budget by `B̂0 = ω_K cos φ`, `B̂z = ω_K sin φ`. Within this
//! family the fidelity depends on `(φ, Ω̂, τ)` only; the initial phase
//! `θ0` rotates each sector block and drops out of every trace, so the
//! scan collapses that axis and reports `θ0 = 0`. Certification is
//! within-family minimality: no claim is made about arbitrary waveforms.
//!
//! Each `τ` slice is scanned on the raw grid, its best cell is refined
//! by coordinate descent, and the earliest slice whose refined fidelity
//! reaches the target wins. Slices are evaluated concurrently; the
//! reduction picks the lexicographically smallest `(τ, cell)` index, so
//! results are deterministic.

use rayon::prelude::*;
use thiserror::Error;

use crate::boundary::boundary_functions;
use crate::evolution::{spectral_constants, SpectralConstants};
use crate::model::{control_field, ControlConstants, FeasibilityError, GateKind, ModelParams};
use crate::report::TraceRow;

/// Coordinate-descent passes of the per-slice refinement.
const REFINE_PASSES: usize = 3;

/// Golden-section iterations per refined coordinate.
const REFINE_ITERATIONS: usize = 28;

/// Failures of the scan machinery.
#[derive(Debug, Clone, Error)]
pub enum SearchError {
    /// A step count below the supported minimum.
    #[error(
        "grid steps must all be at least 8: phi={phi_steps}, omega={omega_steps}, \
         theta0={theta0_steps}, tau={tau_steps}"
    )]
    GridTooCoarse {
        /// Steps along `φ`.
        phi_steps: u32,
        /// Steps along `Ω̂`.
        omega_steps: u32,
        /// Steps along `θ0`.
        theta0_steps: u32,
        /// Steps along `τ`.
        tau_steps: u32,
    },
    /// A non-positive or non-finite scan horizon.
    #[error("tau_max must be positive and finite, got {tau_max}")]
    BadHorizon {
        /// Offending horizon.
        tau_max: f64,
    },
    /// A target fidelity outside `(0, 1]` or a negative tolerance.
    #[error("fidelity target must lie in (0, 1] with tolerance >= 0, got {fidelity_target} and {tolerance}")]
    BadTarget {
        /// Offending target.
        fidelity_target: f64,
        /// Offending tolerance.
        tolerance: f64,
    },
    /// Too few trace samples.
    #[error("trace needs at least 2 samples, got {samples}")]
    TooFewSamples {
        /// Offending count.
        samples: u32,
    },
    /// Parameters or constants failed a feasibility check.
    #[error(transparent)]
    Infeasible(#[from] FeasibilityError),
}

/// Scan resolution and acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    /// Steps along `φ ∈ [0, 2π)`.
    pub phi_steps: u32,
    /// Steps along `Ω̂ ∈ [−8, 8]`.
    pub omega_steps: u32,
    /// Steps along `θ0 ∈ [0, 2π)`; kept for interface symmetry, the
    /// fidelity of the family is `θ0`-independent.
    pub theta0_steps: u32,
    /// Steps along `τ ∈ (0, tau_max]`.
    pub tau_steps: u32,
    /// Scan horizon.
    pub tau_max: f64,
    /// Fidelity the scan tries to reach.
    pub fidelity_target: f64,
    /// Acceptance slack below the target.
    pub tolerance: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            phi_steps: 32,
            omega_steps: 32,
            theta0_steps: 8,
            tau_steps: 512,
            tau_max: 2.5,
            fidelity_target: 1.0,
            tolerance: 1e-4,
        }
    }
}

impl SearchGrid {
    /// Width of one `τ` cell.
    pub fn tau_cell(&self) -> f64 {
        self.tau_max / f64::from(self.tau_steps)
    }

    /// Checks the grid invariants.
    ///
    /// # Errors
    ///
    /// Step counts below 8, a bad horizon, or a bad target.
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.phi_steps < 8 || self.omega_steps < 8 || self.theta0_steps < 8 || self.tau_steps < 8
        {
            return Err(SearchError::GridTooCoarse {
                phi_steps: self.phi_steps,
                omega_steps: self.omega_steps,
                theta0_steps: self.theta0_steps,
                tau_steps: self.tau_steps,
            });
        }
        if !self.tau_max.is_finite() || self.tau_max <= 0.0 {
            return Err(SearchError::BadHorizon {
                tau_max: self.tau_max,
            });
        }
        let target_ok = self.fidelity_target > 0.0 && self.fidelity_target <= 1.0;
        let tolerance_ok = self.tolerance.is_finite() && self.tolerance >= 0.0;
        if !target_ok || !tolerance_ok {
            return Err(SearchError::BadTarget {
                fidelity_target: self.fidelity_target,
                tolerance: self.tolerance,
            });
        }
        Ok(())
    }
}

/// Result of a minimum-time scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOutcome {
    /// Earliest duration reaching the target, or the duration of the
    /// best fidelity found when no cell reaches it.
    pub best_tau: f64,
    /// Refined constants of the winning cell.
    pub best_constants: ControlConstants,
    /// Refined fidelity of the winning cell.
    pub best_fidelity: f64,
    /// `true` when the target was reached within tolerance.
    pub reached_target: bool,
}

struct FamilyPoint {
    omega: f64,
    spectral: SpectralConstants,
}

fn family_point(p: &ModelParams, omega_k: f64, phi: f64, omega: f64) -> Option<FamilyPoint> {
    let c = ControlConstants {
        b0: omega_k * phi.cos(),
        bz: omega_k * phi.sin(),
        omega,
        theta0: 0.0,
        tau_star: 1.0,
    };
    let spectral = spectral_constants(p, &c).ok()?;
    Some(FamilyPoint { omega, spectral })
}

fn family_fidelity(point: &FamilyPoint, kind: GateKind, tau: f64) -> f64 {
    let tp = point.spectral.trig_profile(tau);
    boundary_functions(&point.spectral, &tp, kind).fidelity(point.omega * tau)
}

fn golden_max(mut lo: f64, mut hi: f64, mut eval: impl FnMut(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = eval(a);
    let mut fb = eval(b);
    for _ in 0..REFINE_ITERATIONS {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = eval(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = eval(a);
        }
    }
    if fa > fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

fn refine_cell(
    p: &ModelParams,
    kind: GateKind,
    omega_k: f64,
    tau: f64,
    seed: (f64, f64),
    span: (f64, f64),
) -> (f64, f64, f64) {
    let eval = |phi: f64, omega: f64| {
        family_point(p, omega_k, phi, omega)
            .map_or(-1.0, |point| family_fidelity(&point, kind, tau))
    };
    let (phi_span, omega_span) = span;
    let (mut phi, mut omega) = seed;
    let mut best = eval(phi, omega);
    for _ in 0..REFINE_PASSES {
        let (phi_new, f_phi) = golden_max(phi - phi_span, phi + phi_span, |x| eval(x, omega));
        if f_phi > best {
            phi = phi_new;
            best = f_phi;
        }
        let (omega_new, f_omega) =
            golden_max(omega - omega_span, omega + omega_span, |x| eval(phi, x));
        if f_omega > best {
            omega = omega_new;
            best = f_omega;
        }
    }
    (phi, omega, best)
}

struct SliceBest {
    pair: usize,
    fidelity: f64,
}

/// Scans the control family for the earliest duration reaching the
/// target fidelity at the full energy budget of `p`.
///
/// Raw grid cells are evaluated through the boundary-function trace
/// identity; the best cell of each `τ` slice is refined by coordinate
/// descent in `(φ, Ω̂)` before testing `fidelity ≥ target − tolerance`.
/// When no slice reaches the target the outcome reports the best
/// fidelity found and `reached_target = false`.
///
/// # Errors
///
/// Invalid grid, or parameters without transverse energy.
pub fn min_time_scan(
    p: &ModelParams,
    target_kind: GateKind,
    grid: &SearchGrid,
) -> Result<ScanOutcome, SearchError> {
    grid.validate()?;
    p.validate()?;
    let omega_k = p.omega_k_sq().sqrt();
    let phi_step = 2.0 * std::f64::consts::PI / f64::from(grid.phi_steps);
    let omega_step = 16.0 / f64::from(grid.omega_steps - 1);
    let phi_of = |i: usize| phi_step * i as f64;
    let omega_of = |j: usize| -8.0 + omega_step * j as f64;

    let mut points = Vec::with_capacity((grid.phi_steps * grid.omega_steps) as usize);
    for i in 0..grid.phi_steps as usize {
        for j in 0..grid.omega_steps as usize {
            points.push(family_point(p, omega_k, phi_of(i), omega_of(j)));
        }
    }

    let tau_of = |t: usize| grid.tau_max * (t + 1) as f64 / f64::from(grid.tau_steps);
    let slices: Vec<SliceBest> = (0..grid.tau_steps as usize)
        .into_par_iter()
        .map(|t| {
            let tau = tau_of(t);
            let mut best = SliceBest {
                pair: 0,
                fidelity: -1.0,
            };
            for (pair, point) in points.iter().enumerate() {
                let Some(point) = point else { continue };
                let fidelity = family_fidelity(point, target_kind, tau);
                if fidelity > best.fidelity {
                    best = SliceBest { pair, fidelity };
                }
            }
            best
        })
        .collect();

    let threshold = grid.fidelity_target - grid.tolerance;
    let refine_slice = |t: usize| {
        let slice = &slices[t];
        let i = slice.pair / grid.omega_steps as usize;
        let j = slice.pair % grid.omega_steps as usize;
        refine_cell(
            p,
            target_kind,
            omega_k,
            tau_of(t),
            (phi_of(i), omega_of(j)),
            (phi_step, omega_step),
        )
    };

    let mut hit = None;
    for (t, slice) in slices.iter().enumerate() {
        if slice.fidelity < 0.0 {
            continue;
        }
        let (phi, omega, fidelity) = refine_slice(t);
        if fidelity >= threshold {
            hit = Some((t, phi, omega, fidelity));
            break;
        }
    }

    let (t, phi, omega, fidelity, reached_target) = match hit {
        Some((t, phi, omega, fidelity)) => (t, phi, omega, fidelity, true),
        None => {
            let t = slices
                .iter()
                .enumerate()
                .max_by(|(ta, a), (tb, b)| {
                    a.fidelity.total_cmp(&b.fidelity).then_with(|| tb.cmp(ta))
                })
                .map_or(0, |(t, _)| t);
            let (phi, omega, fidelity) = refine_slice(t);
            (t, phi, omega, fidelity, false)
        }
    };
    let tau = tau_of(t);
    Ok(ScanOutcome {
        best_tau: tau,
        best_constants: ControlConstants {
            b0: (omega_k * phi.cos()).abs(),
            bz: omega_k * phi.sin(),
            omega,
            theta0: 0.0,
            tau_star: tau,
        },
        best_fidelity: fidelity,
        reached_target,
    })
}

/// Samples the gate fidelity and control field along the evolution.
///
/// Rows run over `samples` uniform times in `[0, c.tau_star]`; the last
/// row's fidelity equals the fidelity the solver reports for `c`.
///
/// # Errors
///
/// Fewer than 2 samples, or structurally infeasible constants.
pub fn fidelity_trace(
    p: &ModelParams,
    c: &ControlConstants,
    target_kind: GateKind,
    samples: u32,
) -> Result<Vec<TraceRow>, SearchError> {
    if samples < 2 {
        return Err(SearchError::TooFewSamples { samples });
    }
    let mut effective = ModelParams::implied_by(p.k, c);
    effective.j12_hz = p.j12_hz;
    effective.validate()?;
    let sc = spectral_constants(&effective, c)?;
    let mut rows = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let tau = c.tau_star * f64::from(s) / f64::from(samples - 1);
        let tp = sc.trig_profile(tau);
        let fidelity = boundary_functions(&sc, &tp, target_kind).fidelity(c.omega * tau);
        let [bx, by, bz] = control_field(tau, c);
        rows.push(TraceRow {
            tau,
            bx,
            by,
            bz,
            fidelity,
        });
    }
    Ok(rows)
}
