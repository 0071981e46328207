//! Time-optimal synthesis of entangling gates in a three-qubit Ising chain.
//!
//! The library solves the quantum brachistochrone with fixed final fidelity
//! for a linear chain of three qubits coupled by Ising interactions, where
//! the only control is a bounded-energy local field on the middle qubit.
//! Closed-form optimal protocols are constructed for the entangling gate
//! `U_s^13` and for `CNOT(1,3)`, together with perturbative corrections
//! for detuned couplings and non-unit target fidelity. Every analytic
//! result can be certified against independent numerical oracles: a direct
//! Schrodinger integrator and a brute-force scan over the control family.

pub mod boundary;
pub mod evolution;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod perturbative;
pub mod presets;
pub mod report;
pub mod search;

pub use boundary::{
    solve_perfect, verify_constants, verify_solution, IntegerProfile, PerfectSolution, SolveError,
};
pub use evolution::{propagator_closed_form, SpectralConstants, TrigProfile};
pub use model::{target, ControlConstants, Frame, GateKind, ModelParams, TargetGate};
pub use operator::{fidelity, Operator};
pub use oracle::{propagate, IntegrationSpec, Scheme};
pub use perturbative::{
    fidelity_ceiling, optimal_constants, root_solve_exact, PerturbationError, PerturbationInputs,
    PerturbativeSolution, RootSolution, SigmaVector,
};
pub use report::{PhysicalTime, SolveReport, SweepRow, TraceRow};
pub use search::{fidelity_trace, min_time_scan, ScanOutcome, SearchGrid};
