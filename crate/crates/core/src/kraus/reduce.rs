//! Kraus operators for one qubit of a product input, the other qubit being
//! traced out after the two-qubit channel acts.

use nalgebra::{Matrix4, SMatrix};

use super::KrausSet;
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigh, hermitian_part, max_abs, C64};
use crate::qops::{pauli_string, pauli_unchecked, validate_qubit_state, Qubit, QubitOperator};

/// Tolerance on negative b-matrix eigenvalues.
pub const REDUCTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QubitKrausSet {
    /// (b-matrix eigenvalue, operator)
    pub operators: Vec<(f64, QubitOperator)>,
    pub time: f64,
    /// Smallest eigenvalue of the b-matrix before clamping.
    pub b_min_eigenvalue: f64,
}

impl QubitKrausSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QubitOperator> {
        self.operators.iter().map(|(_, k)| k)
    }

    pub fn apply(&self, rho: &QubitOperator) -> QubitOperator {
        self.iter().fold(QubitOperator::zeros(), |acc, k| acc + k * rho * k.adjoint())
    }

    pub fn completeness_residual(&self) -> f64 {
        let sum = self.iter().fold(QubitOperator::zeros(), |acc, k| acc + k.adjoint() * k);
        max_abs(&(sum - QubitOperator::identity()))
    }
}

/// Pauli-product coefficients c_{ij} = tr((σᵢ⊗σⱼ)K)/4, indexed [kept][traced].
fn coefficients(k: &Matrix4<C64>, traced: Qubit) -> SMatrix<C64, 4, 4> {
    SMatrix::from_fn(|kept, env| {
        let (i, j) = match traced {
            Qubit::Second => (kept, env),
            Qubit::First => (env, kept),
        };
        (pauli_string(i, j) * k).trace() / 4.0
    })
}

/// Reduces `ks` to the kept qubit given the traced qubit's initial state.
pub fn reduce_single_qubit(ks: &KrausSet, env_state: &QubitOperator, traced: Qubit) -> Result<QubitKrausSet> {
    validate_qubit_state(env_state)?;
    let paulis: [QubitOperator; 4] = std::array::from_fn(pauli_unchecked);
    // environment overlaps tr(σⱼ ρ σⱼ′)
    let overlap = SMatrix::<C64, 4, 4>::from_fn(|j, jp| (paulis[j] * env_state * paulis[jp]).trace());
    let mut b = SMatrix::<C64, 4, 4>::zeros();
    for k in ks.iter() {
        let coeff = coefficients(k, traced);
        b += coeff * overlap * coeff.adjoint();
    }
    let b = hermitian_part(&b);
    let (values, vectors) = hermitian_eigh(&b);
    let min = values.min();
    if min < -REDUCTION_TOLERANCE {
        return Err(Error::ReductionInvalid { eigenvalue: min });
    }
    let operators = (0..4)
        .filter(|&k| values[k] > super::ZERO_WEIGHT)
        .map(|k| {
            let op = (0..4).fold(QubitOperator::zeros(), |acc, i| acc + paulis[i] * vectors[(i, k)]);
            (values[k], op * c(values[k].sqrt(), 0.0))
        })
        .collect();
    Ok(QubitKrausSet { operators, time: ks.time, b_min_eigenvalue: min })
}
