//! Python bindings for the gate-synthesis toolkit.
//!
//! The module exposes the perfect-matching solver, the perturbative
//! branch with its exact root certification, the closed-form propagator,
//! gate matrices, trace fidelity, and the molecule preset catalog.
//! Matrices cross the boundary as nested lists of Python complex
//! numbers.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qbf_core::model::target;
use qbf_core::operator::DIM;
use qbf_core::{
    propagator_closed_form, root_solve_exact, solve_perfect, verify_solution, Frame, GateKind,
    IntegrationSpec, ModelParams, Operator, PerfectSolution, PerturbationInputs, SolveReport,
};

fn parse_target(name: &str) -> PyResult<GateKind> {
    match name.to_ascii_lowercase().as_str() {
        "us13" => Ok(GateKind::Us13),
        "cnot13" => Ok(GateKind::Cnot13),
        _ => Err(PyValueError::new_err(format!(
            "unknown target {name:?}; expected \"us13\" or \"cnot13\""
        ))),
    }
}

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn matrix_to_rows(u: &Operator) -> Vec<Vec<Complex64>> {
    (0..DIM)
        .map(|i| (0..DIM).map(|j| u[(i, j)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<Complex64>]) -> PyResult<Operator> {
    if rows.len() != DIM || rows.iter().any(|r| r.len() != DIM) {
        return Err(PyValueError::new_err(format!(
            "expected an {DIM}x{DIM} matrix"
        )));
    }
    let mut u = Operator::zeros();
    for (i, row) in rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    Ok(u)
}

/// One perfect-matching solution branch.
#[pyclass(frozen)]
struct PerfectBranch {
    inner: PerfectSolution,
}

#[pymethods]
impl PerfectBranch {
    #[getter]
    fn k(&self) -> f64 {
        self.inner.params.k
    }

    #[getter]
    fn tau_star(&self) -> f64 {
        self.inner.constants.tau_star
    }

    #[getter]
    fn b0(&self) -> f64 {
        self.inner.constants.b0
    }

    #[getter]
    fn bz(&self) -> f64 {
        self.inner.constants.bz
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.constants.omega
    }

    #[getter]
    fn omega_hat(&self) -> f64 {
        self.inner.params.omega_hat
    }

    #[getter]
    fn omega_k_sq(&self) -> f64 {
        self.inner.omega_k_sq
    }

    #[getter]
    fn n(&self) -> (u32, u32, u32, u32) {
        let [n1, n2, n3, n4] = self.inner.profile.n;
        (n1, n2, n3, n4)
    }

    #[getter]
    fn m(&self) -> i32 {
        self.inner.profile.m
    }

    #[getter]
    fn target(&self) -> &'static str {
        self.inner.profile.target_kind.name()
    }

    fn __repr__(&self) -> String {
        let [n1, n2, n3, n4] = self.inner.profile.n;
        format!(
            "PerfectBranch(target={:?}, n=({}, {}, {}, {}), m={}, tau_star={:.6})",
            self.inner.profile.target_kind.name(),
            n1,
            n2,
            n3,
            n4,
            self.inner.profile.m,
            self.inner.constants.tau_star
        )
    }
}

/// Verification outcome for one branch: oracle fidelity and residuals.
#[pyclass(frozen)]
struct VerificationReport {
    inner: SolveReport,
}

#[pymethods]
impl VerificationReport {
    #[getter]
    fn oracle_fidelity(&self) -> f64 {
        self.inner.oracle_fidelity
    }

    #[getter]
    fn analytic_fidelity(&self) -> f64 {
        self.inner.analytic_fidelity
    }

    #[getter]
    fn fidelity_gap(&self) -> f64 {
        self.inner.fidelity_gap
    }

    #[getter]
    fn boundary_residuals(&self) -> Vec<f64> {
        self.inner.boundary_residuals.to_vec()
    }

    #[getter]
    fn energy_residual(&self) -> f64 {
        self.inner.energy_residual
    }

    #[getter]
    fn within_tolerances(&self) -> bool {
        self.inner.within_tolerances()
    }

    #[getter]
    fn failures(&self) -> Vec<String> {
        self.inner
            .failures()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "VerificationReport(oracle_fidelity={:.12}, within_tolerances={})",
            self.inner.oracle_fidelity,
            self.inner.within_tolerances()
        )
    }
}

/// Perturbative branch constants together with their exact-root refinement.
#[pyclass(frozen)]
struct PerturbativeBranch {
    delta_k: f64,
    fidelity: f64,
    f_max: f64,
    sigma: [f64; 4],
    seed_tau_star: f64,
    tau_star: f64,
    bz: f64,
    b0: f64,
    omega: f64,
    iterations: usize,
    residual_norm: f64,
}

#[pymethods]
impl PerturbativeBranch {
    #[getter]
    fn delta_k(&self) -> f64 {
        self.delta_k
    }

    #[getter]
    fn fidelity(&self) -> f64 {
        self.fidelity
    }

    #[getter]
    fn f_max(&self) -> f64 {
        self.f_max
    }

    #[getter]
    fn sigma(&self) -> Vec<f64> {
        self.sigma.to_vec()
    }

    #[getter]
    fn seed_tau_star(&self) -> f64 {
        self.seed_tau_star
    }

    #[getter]
    fn tau_star(&self) -> f64 {
        self.tau_star
    }

    #[getter]
    fn bz(&self) -> f64 {
        self.bz
    }

    #[getter]
    fn b0(&self) -> f64 {
        self.b0
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.omega
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.iterations
    }

    #[getter]
    fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    fn __repr__(&self) -> String {
        format!(
            "PerturbativeBranch(delta_k={}, fidelity={}, tau_star={:.6}, residual_norm={:.2e})",
            self.delta_k, self.fidelity, self.tau_star, self.residual_norm
        )
    }
}

/// Solves the perfect-fidelity branch enumeration at coupling ratio `k`.
#[pyfunction(name = "solve_perfect", signature = (target, k, n_max=6, m_max=3))]
fn solve_perfect_py(target: &str, k: f64, n_max: u32, m_max: u32) -> PyResult<Vec<PerfectBranch>> {
    let kind = parse_target(target)?;
    let p = ModelParams::new(k, (k * k + 3.0).sqrt());
    let solutions = solve_perfect(&p, kind, n_max, m_max).map_err(value_error)?;
    Ok(solutions
        .into_iter()
        .map(|inner| PerfectBranch { inner })
        .collect())
}

/// Certifies a branch against the independent numeric oracle.
#[pyfunction(signature = (branch, steps=4096))]
fn verify_branch(branch: &PerfectBranch, steps: usize) -> PyResult<VerificationReport> {
    let kind = branch.inner.profile.target_kind;
    let gate = target(kind, Frame::Computational);
    let integration = IntegrationSpec {
        steps,
        ..IntegrationSpec::default()
    };
    let inner = verify_solution(&branch.inner, &gate, &integration).map_err(value_error)?;
    Ok(VerificationReport { inner })
}

/// Solves the perturbative branch and refines it with the exact root solve.
#[pyfunction(name = "solve_perturbative")]
fn solve_perturbative_py(target: &str, k: f64, fidelity: f64) -> PyResult<PerturbativeBranch> {
    let kind = parse_target(target)?;
    let inp = PerturbationInputs::new(k - 1.0, fidelity).map_err(value_error)?;
    let seed = qbf_core::optimal_constants(&inp, kind).map_err(value_error)?;
    let p = ModelParams::implied_by(k, &seed.constants);
    let root =
        root_solve_exact(&p, &seed.profile, fidelity, &seed.constants).map_err(value_error)?;
    Ok(PerturbativeBranch {
        delta_k: inp.delta_k,
        fidelity,
        f_max: seed.f_max,
        sigma: root.sigma.sigma,
        seed_tau_star: seed.constants.tau_star,
        tau_star: root.constants.tau_star,
        bz: root.constants.bz,
        b0: root.constants.b0,
        omega: root.constants.omega,
        iterations: root.iterations,
        residual_norm: root.residual_norm,
    })
}

/// Largest reachable fidelity at detuning `delta_k`.
#[pyfunction]
fn fidelity_ceiling(delta_k: f64) -> f64 {
    qbf_core::fidelity_ceiling(delta_k)
}

/// Closed-form propagator of a branch at evolution time `tau`.
#[pyfunction]
fn propagator(branch: &PerfectBranch, tau: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let u = propagator_closed_form(tau, &branch.inner.params, &branch.inner.constants)
        .map_err(value_error)?;
    Ok(matrix_to_rows(&u))
}

/// Target gate matrix, in the computational frame by default.
#[pyfunction(signature = (target, rotated=false))]
fn gate_matrix(target: &str, rotated: bool) -> PyResult<Vec<Vec<Complex64>>> {
    let kind = parse_target(target)?;
    let frame = if rotated {
        Frame::RotatedQubit3
    } else {
        Frame::Computational
    };
    Ok(matrix_to_rows(&qbf_core::target(kind, frame).matrix))
}

/// Trace fidelity `|Tr(U†V)| / 8` between two unitaries.
#[pyfunction]
fn gate_fidelity(u: Vec<Vec<Complex64>>, v: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let u = rows_to_matrix(&u)?;
    let v = rows_to_matrix(&v)?;
    qbf_core::fidelity(&u, &v).map_err(value_error)
}

/// Molecule preset catalog as `(name, j12_hz, j23_hz, k)` tuples.
#[pyfunction]
fn presets() -> Vec<(String, f64, f64, f64)> {
    qbf_core::presets::list()
        .iter()
        .map(|p| (p.name.to_string(), p.j12_hz, p.j23_hz, p.k()))
        .collect()
}

#[pymodule]
fn qbf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PerfectBranch>()?;
    m.add_class::<VerificationReport>()?;
    m.add_class::<PerturbativeBranch>()?;
    m.add_function(wrap_pyfunction!(solve_perfect_py, m)?)?;
    m.add_function(wrap_pyfunction!(verify_branch, m)?)?;
    m.add_function(wrap_pyfunction!(solve_perturbative_py, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_ceiling, m)?)?;
    m.add_function(wrap_pyfunction!(propagator, m)?)?;
    m.add_function(wrap_pyfunction!(gate_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(gate_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    Ok(())
}
