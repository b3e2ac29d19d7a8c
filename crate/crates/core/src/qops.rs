//! Two-qubit operator algebra.
//!
//! Single-qubit matrices are written in the σz eigenbasis ordered `|+⟩, |−⟩`
//! (σz|±⟩ = ±|±⟩); two-qubit operators use the product ordering
//! `|++⟩, |+−⟩, |−+⟩, |−−⟩` with qubit 1 as the left tensor factor.

use nalgebra::{Matrix2, Matrix4, SVector};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, hermitian_part, max_abs, trace_distance, C64};

/// 4×4 complex operator on the two-qubit space.
pub type Operator = Matrix4<C64>;
/// 2×2 complex operator on a single qubit.
pub type QubitOperator = Matrix2<C64>;
/// Expansion coefficients in the 16-element Hermitian basis.
pub type Coefficients = SVector<C64, 16>;

const ZERO: C64 = c(0.0, 0.0);
const ONE: C64 = c(1.0, 0.0);
const I: C64 = c(0.0, 1.0);

/// Pauli matrix by index: 0 → I, 1 → σx, 2 → σy, 3 → σz.
pub fn pauli(index: usize) -> Result<QubitOperator> {
    match index {
        0 => Ok(Matrix2::new(ONE, ZERO, ZERO, ONE)),
        1 => Ok(Matrix2::new(ZERO, ONE, ONE, ZERO)),
        2 => Ok(Matrix2::new(ZERO, -I, I, ZERO)),
        3 => Ok(Matrix2::new(ONE, ZERO, ZERO, -ONE)),
        _ => Err(Error::InvalidArgument(format!("Pauli index {index} not in 0..=3"))),
    }
}

pub(crate) fn pauli_unchecked(index: usize) -> QubitOperator {
    pauli(index).expect("Pauli index in range")
}

/// σ₋ = |−⟩⟨+|, lowers the σz eigenvalue.
pub fn sigma_minus() -> QubitOperator {
    Matrix2::new(ZERO, ZERO, ONE, ZERO)
}

pub fn kron(a: &QubitOperator, b: &QubitOperator) -> Operator {
    Operator::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// σᵢ ⊗ σⱼ.
pub fn pauli_string(i: usize, j: usize) -> Operator {
    kron(&pauli_unchecked(i), &pauli_unchecked(j))
}

/// Zero-based position of σᵢ⊗σⱼ/2 in [`HermitianBasis`]: qubit-1 index major.
pub const fn basis_index(i: usize, j: usize) -> usize {
    4 * i + j
}

/// Product of single-qubit Paulis: σₐσ_b = phase · σ_c.
pub fn pauli_mul(a: usize, b: usize) -> (C64, usize) {
    match (a, b) {
        (0, x) | (x, 0) => (ONE, x),
        (x, y) if x == y => (ONE, 0),
        (1, 2) => (I, 3),
        (2, 1) => (-I, 3),
        (2, 3) => (I, 1),
        (3, 2) => (-I, 1),
        (3, 1) => (I, 2),
        (1, 3) => (-I, 2),
        _ => unreachable!("Pauli indices are 0..=3"),
    }
}

/// Product of two-qubit Pauli strings addressed by basis index.
pub fn pauli_string_mul(n: usize, m: usize) -> (C64, usize) {
    let (p1, a) = pauli_mul(n / 4, m / 4);
    let (p2, b) = pauli_mul(n % 4, m % 4);
    (p1 * p2, basis_index(a, b))
}

/// Orthonormal Hermitian operator basis Gₙ = σᵢ⊗σⱼ/2, n = 4i + j (zero-based),
/// with tr(GₙGₘ) = δₙₘ and G₀ = I/2.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBasis {
    elements: [Operator; 16],
}

impl HermitianBasis {
    pub const LEN: usize = 16;

    pub fn new() -> Self {
        let elements = std::array::from_fn(|n| pauli_string(n / 4, n % 4).scale(0.5));
        Self { elements }
    }

    /// Zero-based access; `element(0)` is I/2.
    pub fn element(&self, n: usize) -> &Operator {
        &self.elements[n]
    }

    pub fn elements(&self) -> &[Operator; 16] {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = &Operator> {
        self.elements.iter()
    }
}

impl Default for HermitianBasis {
    fn default() -> Self {
        Self::new()
    }
}

pub fn hermitian_basis() -> HermitianBasis {
    HermitianBasis::new()
}

/// cₙ = tr(Gₙ·op).
pub fn expand(op: &Operator, basis: &HermitianBasis) -> Coefficients {
    Coefficients::from_fn(|n, _| (basis.element(n) * op).trace())
}

pub fn reconstruct(coeffs: &Coefficients, basis: &HermitianBasis) -> Operator {
    basis
        .iter()
        .zip(coeffs.iter())
        .fold(Operator::zeros(), |acc, (g, &cn)| acc + g * cn)
}

/// Which qubit an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qubit {
    First,
    Second,
}

/// Partial trace removing `traced`; returns the reduced operator on the other qubit.
pub fn partial_trace(op: &Operator, traced: Qubit) -> QubitOperator {
    QubitOperator::from_fn(|r, col| match traced {
        Qubit::Second => op[(2 * r, 2 * col)] + op[(2 * r + 1, 2 * col + 1)],
        Qubit::First => op[(r, col)] + op[(2 + r, 2 + col)],
    })
}

/// Acceptance thresholds used when validating a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    pub negativity: f64,
}

impl StateTolerance {
    pub const STRICT: Self = Self { hermiticity: 1e-12, trace: 1e-12, negativity: 1e-10 };
    /// For states produced by numerically applied channels.
    pub const EVOLVED: Self = Self { hermiticity: 1e-9, trace: 1e-6, negativity: 1e-9 };
}

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(matrix: Operator) -> Result<Self> {
        Self::with_tolerance(matrix, StateTolerance::STRICT)
    }

    /// Validates against `tol`, then stores the Hermitian part.
    pub fn with_tolerance(matrix: Operator, tol: StateTolerance) -> Result<Self> {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = max_abs(&(matrix - matrix.adjoint()));
        if herm > tol.hermiticity {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let m = hermitian_part(&matrix);
        let min = hermitian_eigenvalues(&m).min();
        if min < -tol.negativity {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_matrix(self) -> Operator {
        self.0
    }

    /// (|+−⟩ + |−+⟩)/√2 projector.
    pub fn bell_plus() -> Self {
        let mut m = Operator::zeros();
        for (r, col) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            m[(r, col)] = c(0.5, 0.0);
        }
        Self(m)
    }

    /// I/4.
    pub fn maximally_mixed() -> Self {
        Self(Operator::identity().scale(0.25))
    }

    pub fn product(rho1: &QubitOperator, rho2: &QubitOperator) -> Result<Self> {
        validate_qubit_state(rho1)?;
        validate_qubit_state(rho2)?;
        Self::new(kron(rho1, rho2))
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        trace_distance(&self.0, &other.0)
    }
}

pub fn bell_plus() -> DensityMatrix {
    DensityMatrix::bell_plus()
}

/// Checks a single-qubit density matrix against the strict tolerances.
pub fn validate_qubit_state(rho: &QubitOperator) -> Result<()> {
    let tol = StateTolerance::STRICT;
    if max_abs(&(rho - rho.adjoint())) > tol.hermiticity {
        return Err(Error::InvalidState("single-qubit state not Hermitian".into()));
    }
    if (rho.trace() - ONE).norm() > tol.trace {
        return Err(Error::InvalidState("single-qubit state trace differs from 1".into()));
    }
    if hermitian_eigenvalues(rho).min() < -tol.negativity {
        return Err(Error::InvalidState("single-qubit state not positive".into()));
    }
    Ok(())
}
