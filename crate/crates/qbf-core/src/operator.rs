//! Dense operator algebra on the three-qubit Hilbert space.
//!
//! Every operator in the crate is a dense complex 8x8 matrix in the
//! computational product basis `|q1 q2 q3>` with qubit 1 most significant.
//! Diagonal operators on the qubit-1,3 subspace are ordered by
//! `(q1 q3) = (00, 01, 10, 11)`. This module provides Pauli-string
//! construction, the trace inner product and fidelity, the Walsh-Hadamard
//! rotation on qubit 3, and Hermitian matrix exponentials.

use nalgebra::SMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix acting on the full three-qubit space.
pub type Operator = SMatrix<Complex64, 8, 8>;

/// Hilbert-space dimension for three qubits.
pub const DIM: usize = 8;

/// Entrywise tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Max-entry tolerance for unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Errors raised by operator-level validation.
#[derive(Debug, Clone, Error)]
pub enum OperatorError {
    /// Input failed the `A = A†` check.
    #[error("operator is not Hermitian: max |A - A^dag| entry = {deviation:.3e}")]
    NotHermitian {
        /// Largest entrywise deviation from the adjoint.
        deviation: f64,
    },
    /// Input failed the `U†U = 1` check.
    #[error("operator is not unitary: max |U^dag U - 1| entry = {deviation:.3e}")]
    NotUnitary {
        /// Largest entrywise deviation from the identity.
        deviation: f64,
    },
}

/// Pauli axis label for one tensor slot; `I` leaves the slot untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Identity slot.
    I,
    /// Pauli x.
    X,
    /// Pauli y.
    Y,
    /// Pauli z.
    Z,
}

impl Axis {
    /// 2x2 matrix of this axis label as rows of `(col0, col1)` entries.
    fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::I => [[l, o], [o, l]],
            Axis::X => [[o, l], [l, o]],
            Axis::Y => [[o, -i], [i, o]],
            Axis::Z => [[l, o], [o, -l]],
        }
    }
}

/// 8x8 identity.
pub fn identity() -> Operator {
    Operator::identity()
}

/// Kronecker product `a1 ⊗ a2 ⊗ a3` of single-qubit Pauli slots, with
/// qubit 1 most significant. Invalid labels are unrepresentable by the
/// `Axis` type, so every call is well formed.
pub fn pauli_product(a1: Axis, a2: Axis, a3: Axis) -> Operator {
    let (m1, m2, m3) = (a1.matrix(), a2.matrix(), a3.matrix());
    let mut out = Operator::zeros();
    for r in 0..DIM {
        let (r1, r2, r3) = (r >> 2 & 1, r >> 1 & 1, r & 1);
        for c in 0..DIM {
            let (c1, c2, c3) = (c >> 2 & 1, c >> 1 & 1, c & 1);
            out[(r, c)] = m1[r1][c1] * m2[r2][c2] * m3[r3][c3];
        }
    }
    out
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Trace inner product `<A, B> = Tr(A† B)`.
pub fn inner(a: &Operator, b: &Operator) -> Complex64 {
    (a.adjoint() * b).trace()
}

/// Largest entrywise modulus of `a − b`.
pub fn max_entry_deviation(a: &Operator, b: &Operator) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `a` from its own adjoint.
pub fn hermiticity_deviation(a: &Operator) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `U†U` from the identity.
pub fn unitarity_deviation(u: &Operator) -> f64 {
    let d = u.adjoint() * u - identity();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `true` when `a` is Hermitian within [`HERMITICITY_TOL`].
pub fn is_hermitian(a: &Operator) -> bool {
    hermiticity_deviation(a) <= HERMITICITY_TOL
}

/// `true` when `u` is unitary within [`UNITARITY_TOL`].
pub fn is_unitary(u: &Operator) -> bool {
    unitarity_deviation(u) <= UNITARITY_TOL
}

/// Gate fidelity `|Tr(U† Uf)| / 8`, invariant under a global phase of
/// either argument.
///
/// # Errors
///
/// Rejects arguments that fail the unitarity check, since the trace
/// overlap only measures gate agreement between unitaries.
pub fn fidelity(u: &Operator, uf: &Operator) -> Result<f64, OperatorError> {
    for m in [u, uf] {
        let deviation = unitarity_deviation(m);
        if deviation > UNITARITY_TOL {
            return Err(OperatorError::NotUnitary { deviation });
        }
    }
    Ok(trace_overlap(u, uf))
}

/// `|Tr(U† Uf)| / 8` without the unitarity guard, for callers that have
/// already validated their operators.
pub(crate) fn trace_overlap(u: &Operator, uf: &Operator) -> f64 {
    inner(u, uf).norm() / DIM as f64
}

/// `V³ = 1 ⊗ 1 ⊗ W`: the Walsh-Hadamard transform on qubit 3. Unitary,
/// Hermitian, and an involution, it swaps `σx³ ↔ σz³` under conjugation.
pub fn walsh_hadamard_on_qubit3() -> Operator {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut out = Operator::zeros();
    for r in 0..DIM {
        let high = r & !1;
        out[(r, high)] = s;
        out[(r, high | 1)] = if r & 1 == 0 { s } else { -s };
    }
    out
}

/// `e^{-iA}` for Hermitian `A`, by unitary eigendecomposition.
///
/// # Errors
///
/// Rejects non-Hermitian input (entrywise tolerance [`HERMITICITY_TOL`]),
/// since only then is the result guaranteed unitary.
pub fn expm_hermitian(a: &Operator) -> Result<Operator, OperatorError> {
    let deviation = hermiticity_deviation(a);
    if deviation > HERMITICITY_TOL {
        return Err(OperatorError::NotHermitian { deviation });
    }
    let eig = a.symmetric_eigen();
    let mut out = Operator::zeros();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda);
        let v = eig.eigenvectors.column(j);
        for r in 0..DIM {
            for c in 0..DIM {
                out[(r, c)] += phase * v[r] * v[c].conj();
            }
        }
    }
    Ok(out)
}

/// `e^{-iA}` by scaling-and-squaring with a truncated Taylor series.
/// Agrees with [`expm_hermitian`] to machine precision and is cheap
/// enough for per-step use in the numeric propagator; the input is
/// assumed Hermitian and is not re-checked here.
pub(crate) fn expm_hermitian_fast(a: &Operator) -> Operator {
    let max_row_sum = (0..DIM)
        .map(|r| (0..DIM).map(|c| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if max_row_sum > 0.5 {
        (max_row_sum / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new(0.0, -1.0 / f64::powi(2.0, squarings as i32));
    let m = a.map(|z| z * scale);
    let mut term = identity();
    let mut sum = identity();
    for k in 1..=16 {
        term = term * m / Complex64::new(k as f64, 0.0);
        sum += term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Operator diagonal in the qubit-1,3 subspace, stored as four complex
/// entries ordered by `(q1 q3) = (00, 01, 10, 11)`. Acts identically on
/// both states of qubit 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalBlock13 {
    /// Diagonal values per `(q1 q3)` sector.
    pub d: [Complex64; 4],
}

impl DiagonalBlock13 {
    /// Wraps four sector values.
    pub fn new(d: [Complex64; 4]) -> Self {
        Self { d }
    }

    /// Real sector values lifted to complex storage.
    pub fn from_real(d: [f64; 4]) -> Self {
        Self {
            d: d.map(|x| Complex64::new(x, 0.0)),
        }
    }

    /// Embeds into the full space: sector `(q1 q3)` occupies the two basis
    /// states `|q1 0 q3>` and `|q1 1 q3>`. The result commutes with both
    /// `σz¹` and `σz³`.
    pub fn embed(&self) -> Operator {
        let mut out = Operator::zeros();
        for q1 in 0..2usize {
            for q3 in 0..2usize {
                let v = self.d[2 * q1 + q3];
                out[(4 * q1 + q3, 4 * q1 + q3)] = v;
                out[(4 * q1 + 2 + q3, 4 * q1 + 2 + q3)] = v;
            }
        }
        out
    }

    /// Entrywise product with another 1,3-diagonal block.
    pub fn mul(&self, other: &Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(other.d.iter()) {
            *x *= y;
        }
        Self { d }
    }

    /// Scales every sector value.
    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            d: self.d.map(|x| x * z),
        }
    }
}
