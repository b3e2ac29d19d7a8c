//! Generator matrices Lᵢⱼ = tr(Gᵢ Λ[Gⱼ]) in the Hermitian basis.
//!
//! Two routes produce L: the closed-form table (authoritative) and the
//! microscopic dissipators built from the model's jump operators. They are
//! compared entry by entry, never reconciled silently.

use std::fmt;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::model::{damping_rates, lindblad_operators, DampingRates, ModelParams};
use crate::qops::{HermitianBasis, Operator};

/// Real 16×16 representation of a superoperator in the Hermitian basis.
pub type Superoperator = SMatrix<f64, 16, 16>;

/// Position in the basis of each printed table label (label `p` is at index `p − 1`).
///
/// The printed table enumerates σᵢ⊗σⱼ/2 with the qubit-2 index major, and its
/// labels 7 and 13 are exchanged: printed label 7 is I⊗σz, the operator
/// conserved by qubit-1 jumps.
pub const PRINTED_TO_BASIS: [usize; 16] = [0, 4, 8, 12, 1, 5, 3, 13, 2, 6, 10, 14, 9, 7, 11, 15];

/// Inverse of [`PRINTED_TO_BASIS`].
pub const BASIS_TO_PRINTED: [usize; 16] = {
    let mut inv = [0usize; 16];
    let mut p = 0;
    while p < 16 {
        inv[PRINTED_TO_BASIS[p]] = p;
        p += 1;
    }
    inv
};

/// How printed table labels are attached to basis elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableLabels {
    /// Through [`PRINTED_TO_BASIS`].
    #[default]
    Corrected,
    /// Printed label `p` taken as basis element `p` directly. This map is not
    /// completely positive; kept for diagnostics.
    AsPrinted,
}

/// Reorders a matrix given in printed-label coordinates into basis coordinates.
pub fn printed_to_basis(m: &Superoperator) -> Superoperator {
    let mut out = Superoperator::zeros();
    for p in 0..16 {
        for q in 0..16 {
            out[(PRINTED_TO_BASIS[p], PRINTED_TO_BASIS[q])] = m[(p, q)];
        }
    }
    out
}

/// Reorders a basis-coordinate matrix into printed-label coordinates.
pub fn basis_to_printed(m: &Superoperator) -> Superoperator {
    Superoperator::from_fn(|p, q| m[(PRINTED_TO_BASIS[p], PRINTED_TO_BASIS[q])])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Tabulated,
    Microscopic,
}

/// Generator L in basis coordinates. Row 0 vanishes (trace preservation) and,
/// for the model's generators, column 0 vanishes too (unital map).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    entries: Superoperator,
    provenance: Provenance,
}

impl GeneratorMatrix {
    pub fn new(entries: Superoperator, provenance: Provenance) -> Self {
        Self { entries, provenance }
    }

    pub fn entries(&self) -> &Superoperator {
        &self.entries
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn to_printed_labels(&self) -> Superoperator {
        basis_to_printed(&self.entries)
    }

    /// Max-row-sum norm, used to size integration steps.
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

const DIAG_SINGLE: [usize; 12] = [2, 3, 5, 6, 8, 9, 10, 11, 12, 13, 14, 15];
const PAIRS_SINGLE: [(usize, usize); 4] = [(2, 14), (3, 15), (14, 2), (15, 3)];

/// The closed-form generator table in printed-label coordinates (zero-based
/// storage of one-based labels).
pub fn printed_table(rates: &DampingRates) -> Superoperator {
    let (sum, diff) = (rates.gamma1 + rates.gamma2, rates.gamma1 - rates.gamma2);
    let mut l = Superoperator::zeros();
    for k in DIAG_SINGLE {
        l[(k - 1, k - 1)] = -8.0 * sum;
    }
    for (i, j) in PAIRS_SINGLE {
        l[(i - 1, j - 1)] = -8.0 * diff;
    }
    l[(3, 3)] = -16.0 * sum;
    l[(15, 15)] = -16.0 * sum;
    l[(3, 15)] = -16.0 * diff;
    l[(15, 3)] = -16.0 * diff;
    l
}

pub fn tabulated_generator(rates: &DampingRates) -> GeneratorMatrix {
    tabulated_generator_with(rates, TableLabels::Corrected)
}

pub fn tabulated_generator_with(rates: &DampingRates, labels: TableLabels) -> GeneratorMatrix {
    let printed = printed_table(rates);
    let entries = match labels {
        TableLabels::Corrected => printed_to_basis(&printed),
        TableLabels::AsPrinted => printed,
    };
    GeneratorMatrix::new(entries, Provenance::Tabulated)
}

fn dissipate(a: &Operator, x: &Operator) -> Operator {
    let ada = a.adjoint() * a;
    a * x * a.adjoint() - (ada * x + x * ada).scale(0.5)
}

/// Matrix of 𝒜[ρ] = AρA† − ½{A†A, ρ}: entry (i, j) = tr(Gᵢ 𝒜[Gⱼ]).
pub fn dissipator_matrix(a: &Operator, basis: &HermitianBasis) -> Superoperator {
    let images: Vec<Operator> = basis.iter().map(|g| dissipate(a, g)).collect();
    Superoperator::from_fn(|i, j| (basis.element(i) * images[j]).trace().re)
}

/// Weighted jump operators Σₖ rateₖ 𝒜ₖ.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorSpec {
    terms: Vec<(f64, Operator)>,
}

impl DissipatorSpec {
    pub fn new(terms: Vec<(f64, Operator)>) -> Result<Self> {
        if let Some((rate, _)) = terms.iter().find(|(r, _)| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidArgument(format!("dissipator rate {rate} must be >= 0")));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, Operator)] {
        &self.terms
    }

    pub fn matrix(&self, basis: &HermitianBasis) -> Superoperator {
        self.terms
            .iter()
            .fold(Superoperator::zeros(), |acc, (rate, a)| acc + dissipator_matrix(a, basis) * *rate)
    }
}

/// Jump operators of the model with their rates: γ₂ on A₁, A₁† and γ₁ on A₂, A₂†.
pub fn model_dissipators(params: &ModelParams, rates: &DampingRates) -> DissipatorSpec {
    let ops = lindblad_operators(params);
    DissipatorSpec {
        terms: vec![
            (rates.gamma2, ops.a1),
            (rates.gamma2, ops.a1.adjoint()),
            (rates.gamma1, ops.a2),
            (rates.gamma1, ops.a2.adjoint()),
        ],
    }
}

/// One compared entry; positions are one-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryComparison {
    pub printed: (usize, usize),
    pub basis: (usize, usize),
    pub tabulated: f64,
    pub microscopic: f64,
}

impl EntryComparison {
    pub fn delta(&self) -> f64 {
        self.microscopic - self.tabulated
    }
}

/// Entry-wise comparison of the microscopic generator against the table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Global factor applied to the raw microscopic generator.
    pub calibration: f64,
    /// Positions where the table is nonzero.
    pub listed: Vec<EntryComparison>,
    /// Positions where the table is zero but the microscopic entry is not.
    pub unlisted: Vec<EntryComparison>,
}

impl ComparisonReport {
    pub fn max_listed_delta(&self) -> f64 {
        self.listed.iter().map(|e| e.delta().abs()).fold(0.0, f64::max)
    }

    pub fn max_unlisted_magnitude(&self) -> f64 {
        self.unlisted.iter().map(|e| e.microscopic.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "calibration = {:.12e}", self.calibration)?;
        writeln!(f, "max_listed_delta = {:.3e}", self.max_listed_delta())?;
        writeln!(f, "unlisted_nonzero = {}", self.unlisted.len())?;
        writeln!(f, "kind printed_row printed_col basis_row basis_col tabulated microscopic delta")?;
        let rows = self.listed.iter().map(|e| ("listed", e)).chain(self.unlisted.iter().map(|e| ("unlisted", e)));
        for (kind, e) in rows {
            writeln!(
                f,
                "{kind} {} {} {} {} {:.12e} {:.12e} {:.3e}",
                e.printed.0,
                e.printed.1,
                e.basis.0,
                e.basis.1,
                e.tabulated,
                e.microscopic,
                e.delta()
            )?;
        }
        Ok(())
    }
}

/// Absolute threshold below which a microscopic entry counts as zero.
const UNLISTED_THRESHOLD: f64 = 1e-12;

pub fn compare_generators(tabulated: &GeneratorMatrix, microscopic: &Superoperator, calibration: f64) -> ComparisonReport {
    let tab = tabulated.entries();
    let scale = microscopic.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut listed = Vec::new();
    let mut unlisted = Vec::new();
    for i in 0..16 {
        for j in 0..16 {
            let entry = EntryComparison {
                printed: (BASIS_TO_PRINTED[i] + 1, BASIS_TO_PRINTED[j] + 1),
                basis: (i + 1, j + 1),
                tabulated: tab[(i, j)],
                microscopic: microscopic[(i, j)],
            };
            if tab[(i, j)] != 0.0 {
                listed.push(entry);
            } else if microscopic[(i, j)].abs() > UNLISTED_THRESHOLD * scale {
                unlisted.push(entry);
            }
        }
    }
    listed.sort_by_key(|e| e.printed);
    unlisted.sort_by_key(|e| e.printed);
    ComparisonReport { calibration, listed, unlisted }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroscopicGenerator {
    pub generator: GeneratorMatrix,
    pub report: ComparisonReport,
}

/// s·[γ₂(𝒟(A₁)+𝒟(A₁†)) + γ₁(𝒟(A₂)+𝒟(A₂†))], with s fixed by matching the
/// table at printed position (2, 2).
pub fn microscopic_generator(params: &ModelParams, basis: &HermitianBasis) -> Result<MicroscopicGenerator> {
    let rates = damping_rates(params)?;
    let raw = model_dissipators(params, &rates).matrix(basis);
    let tabulated = tabulated_generator(&rates);
    let anchor = (PRINTED_TO_BASIS[1], PRINTED_TO_BASIS[1]);
    if raw[anchor] == 0.0 {
        return Err(Error::Configuration("microscopic generator vanishes at the calibration entry".into()));
    }
    let calibration = tabulated.entries()[anchor] / raw[anchor];
    let entries = raw * calibration;
    let report = compare_generators(&tabulated, &entries, calibration);
    Ok(MicroscopicGenerator { generator: GeneratorMatrix::new(entries, Provenance::Microscopic), report })
}

/// Imaginary residual of tr(Gᵢ 𝒜[Gⱼ]); zero for any A since 𝒜 preserves Hermiticity.
pub fn dissipator_imaginary_residual(a: &Operator, basis: &HermitianBasis) -> f64 {
    let mut worst = 0.0f64;
    for g in basis.iter() {
        let image = dissipate(a, g);
        for h in basis.iter() {
            let v: C64 = (h * image).trace();
            worst = worst.max(v.im.abs());
        }
    }
    worst
}
