//! Physical model: two coupled qubits, qubit 1 coupled through S₁ₓ to an
//! Ohmic thermal bath.
//!
//! Units: ℏ = k_B = 1.

use std::f64::consts::PI;

use nalgebra::Vector4;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigh, max_abs};
use crate::qops::{kron, pauli_string, pauli_unchecked, sigma_minus, Operator};

/// How the damping rate is evaluated at a negative Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RateConvention {
    /// γ(ν) evaluated at |ν|, the high-temperature symmetric rate γ(ν) ≈ γ(−ν).
    #[default]
    Symmetric,
    /// 4πJ(ν)n̄(ν) evaluated at the signed frequency.
    Literal,
}

impl RateConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateConvention::Symmetric => "symmetric",
            RateConvention::Literal => "literal",
        }
    }
}

impl std::str::FromStr for RateConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(RateConvention::Symmetric),
            "literal" => Ok(RateConvention::Literal),
            other => Err(Error::InvalidArgument(format!("unknown rate convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Qubit frequency ω.
    pub omega: f64,
    /// Inter-qubit coupling β.
    pub beta: f64,
    /// Weak-coupling constant α.
    pub alpha: f64,
    pub temperature: f64,
    /// Ohmic cutoff ν_c.
    pub cutoff: f64,
    pub convention: RateConvention,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega: 0.1,
            beta: 0.0,
            alpha: 0.02,
            temperature: 100.0,
            cutoff: 100.0,
            convention: RateConvention::Symmetric,
        }
    }
}

impl ModelParams {
    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega", self.omega),
            ("beta", self.beta),
            ("alpha", self.alpha),
            ("temperature", self.temperature),
            ("cutoff", self.cutoff),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        for (name, value) in [fields[0], fields[2], fields[3], fields[4]] {
            if value <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {value}")));
            }
        }
        if self.beta < 0.0 {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn bohr_frequencies(&self) -> BohrFrequencies {
        BohrFrequencies {
            nu1: self.omega + self.beta / 2.0,
            nu2: 2.0 * self.omega,
            nu3: self.omega - self.beta / 2.0,
        }
    }
}

/// Transition frequencies between the three energy levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BohrFrequencies {
    /// E₁ − E₂ = ω + β/2.
    pub nu1: f64,
    /// E₁ − E₃ = 2ω.
    pub nu2: f64,
    /// E₂ − E₃ = ω − β/2 (negative once β > 2ω).
    pub nu3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingRates {
    /// Rate of the A₂ channel, evaluated at ν₁.
    pub gamma1: f64,
    /// Rate of the A₁ channel, evaluated at ν₃.
    pub gamma2: f64,
}

impl DampingRates {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1.is_finite() && gamma2.is_finite()) || gamma1 < 0.0 || gamma2 < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "damping rates must be finite and >= 0, got ({gamma1}, {gamma2})"
            )));
        }
        Ok(Self { gamma1, gamma2 })
    }

    pub fn sum(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    pub fn min(&self) -> f64 {
        self.gamma1.min(self.gamma2)
    }
}

/// Ohmic spectral density J(ν) = α ν e^{−ν/ν_c}, applied literally for ν < 0.
pub fn spectral_density(nu: f64, params: &ModelParams) -> f64 {
    params.alpha * nu * (-nu / params.cutoff).exp()
}

/// Bose occupation n̄(ν) = 1/(e^{ν/T} − 1).
pub fn mean_occupation(nu: f64, params: &ModelParams) -> Result<f64> {
    if nu == 0.0 {
        return Err(Error::SingularFrequency { frequency: nu });
    }
    Ok(1.0 / (nu / params.temperature).exp_m1())
}

/// Single rate 4π J(ν) n̄(ν) under the parameter set's convention.
pub fn damping_rate(nu: f64, params: &ModelParams) -> Result<f64> {
    let nu = match params.convention {
        RateConvention::Symmetric => nu.abs(),
        RateConvention::Literal => nu,
    };
    Ok(4.0 * PI * spectral_density(nu, params) * mean_occupation(nu, params)?)
}

pub fn damping_rates(params: &ModelParams) -> Result<DampingRates> {
    params.validate()?;
    let bohr = params.bohr_frequencies();
    DampingRates::new(damping_rate(bohr.nu1, params)?, damping_rate(bohr.nu3, params)?)
}

/// ω/2 σ₁z + ω/2 σ₂z + β/4 σ₁z⊗σ₂z.
pub fn system_hamiltonian(params: &ModelParams) -> Operator {
    let (w, b) = (params.omega, params.beta);
    (pauli_string(3, 0) + pauli_string(0, 3)).scale(w / 2.0) + pauli_string(3, 3).scale(b / 4.0)
}

/// S₁ₓ = σ₁ₓ/2, the system side of the bath coupling.
pub fn coupling_operator() -> Operator {
    pauli_string(1, 0).scale(0.5)
}

/// One energy level of the system Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub projector: Operator,
}

/// Levels E₁ = ω + β/4 (|++⟩), E₂ = −β/4 (|+−⟩, |−+⟩), E₃ = −ω + β/4 (|−−⟩),
/// labelled by product-state content rather than energy order.
pub fn model_levels(params: &ModelParams) -> [Level; 3] {
    let (w, b) = (params.omega, params.beta);
    let diag = |d: [f64; 4]| Operator::from_diagonal(&Vector4::from_fn(|i, _| c(d[i], 0.0)));
    [
        Level { energy: w + b / 4.0, projector: diag([1.0, 0.0, 0.0, 0.0]) },
        Level { energy: -b / 4.0, projector: diag([0.0, 1.0, 1.0, 0.0]) },
        Level { energy: -w + b / 4.0, projector: diag([0.0, 0.0, 0.0, 1.0]) },
    ]
}

/// Eigenvalues of a Hermitian operator clustered with relative tolerance
/// `rel_tol`, each with its spectral projector. Ordered by descending energy.
pub fn spectral_levels(h: &Operator, rel_tol: f64) -> Vec<Level> {
    let (values, vectors) = hermitian_eigh(h);
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut levels: Vec<(f64, Vec<usize>)> = Vec::new();
    for k in 0..4 {
        match levels.last_mut() {
            Some((e, members)) if (values[k] - *e).abs() <= rel_tol * scale => {
                members.push(k);
                *e = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
            }
            _ => levels.push((values[k], vec![k])),
        }
    }
    levels
        .into_iter()
        .map(|(energy, members)| {
            let projector = members.iter().fold(Operator::zeros(), |acc, &k| {
                let v = vectors.column(k);
                acc + v * v.adjoint()
            });
            Level { energy, projector }
        })
        .collect()
}

/// Eigenvalue clustering tolerance used for projector assembly.
pub const LEVEL_TOLERANCE: f64 = 1e-10;

/// A(ν) = Σ_{E_m − E_n = ν} P_n A P_m, one entry per distinct Bohr frequency
/// (positive, zero and negative), sorted by ν. Vanishing operators are omitted.
pub fn eigenoperators(h: &Operator, a: &Operator) -> Vec<(f64, Operator)> {
    let levels = spectral_levels(h, LEVEL_TOLERANCE);
    let scale = levels.iter().fold(1.0f64, |m, l| m.max(l.energy.abs()));
    let mut out: Vec<(f64, Operator)> = Vec::new();
    for ln in &levels {
        for lm in &levels {
            let nu = lm.energy - ln.energy;
            let term = ln.projector * a * lm.projector;
            match out.iter_mut().find(|(f, _)| (f - nu).abs() <= LEVEL_TOLERANCE * scale) {
                Some((_, op)) => *op += term,
                None => out.push((nu, term)),
            }
        }
    }
    out.retain(|(_, op)| max_abs(op) > 1e-14);
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// The two jump operators of the model, resolved by transition rather than by
/// frequency so they stay distinct at β = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladOperators {
    /// P₃ S₁ₓ P₂ ∝ σ₁₋⊗(I − σ₂z), paired with γ₂.
    pub a1: Operator,
    /// P₂ S₁ₓ P₁ ∝ σ₁₋⊗(I + σ₂z), paired with γ₁.
    pub a2: Operator,
}

pub fn lindblad_operators(params: &ModelParams) -> LindbladOperators {
    let [p1, p2, p3] = model_levels(params).map(|l| l.projector);
    let s = coupling_operator();
    LindbladOperators { a1: p3 * s * p2, a2: p2 * s * p1 }
}

/// Closed forms (1/8)σ₁₋⊗(I ∓ σ₂z), used as a reference in tests and reports.
pub fn reference_lindblad_operators() -> LindbladOperators {
    let id = pauli_unchecked(0);
    let z = pauli_unchecked(3);
    LindbladOperators {
        a1: kron(&sigma_minus(), &(id - z)).scale(1.0 / 8.0),
        a2: kron(&sigma_minus(), &(id + z)).scale(1.0 / 8.0),
    }
}

/// λ minimising ‖x − λy‖_F; `None` if `y` vanishes.
#[cfg(test)]
pub(crate) fn proportionality(x: &Operator, y: &Operator) -> Option<crate::linalg::C64> {
    let denom = y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if denom == 0.0 {
        return None;
    }
    let num: crate::linalg::C64 = y.iter().zip(x.iter()).map(|(yv, xv)| yv.conj() * xv).sum();
    Some(num / denom)
}
