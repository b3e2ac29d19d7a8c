//! Generator → map → Choi matrix → Kraus operators, plus channel diagnostics.

pub mod analytic;
pub mod dump;
pub mod reduce;

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::generator::{basis_to_printed, GeneratorMatrix, Superoperator};
use crate::linalg::{c, hermitian_eigh, real_symmetric_eigh, hermitian_part, max_abs, matrix_exponential, C64};
use crate::model::{system_hamiltonian, DampingRates, ModelParams};
use crate::qops::{expand, pauli_string_mul, DensityMatrix, HermitianBasis, Operator, StateTolerance};

pub use analytic::{
    analytic_kraus, analytic_kraus_parts, analytic_kraus_parts_with, analytic_kraus_with, compare_analytic, AnalyticCoefficients,
    AnalyticComparison, AnalyticKraus, BFormula,
};
pub use reduce::{reduce_single_qubit, QubitKrausSet};

/// Default negative-eigenvalue tolerance separating solver noise from CP violation.
pub const CP_TOLERANCE: f64 = 1e-9;
/// Choi eigenvalues at or below this are treated as zero weight.
pub const ZERO_WEIGHT: f64 = 1e-13;
/// Largest imaginary Choi entry for which S is treated as real.
pub const REAL_CHOI_TOLERANCE: f64 = 1e-13;
/// Completeness residual required before a Kraus set is applied to a state.
pub const APPLY_TOLERANCE: f64 = 1e-6;

/// F = e^{Lt}.
#[derive(Debug, Clone, PartialEq)]
pub struct MapMatrix {
    entries: Superoperator,
    time: f64,
}

impl MapMatrix {
    pub fn new(entries: Superoperator, time: f64) -> Self {
        Self { entries, time }
    }

    pub fn entries(&self) -> &Superoperator {
        &self.entries
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn to_printed_labels(&self) -> Superoperator {
        basis_to_printed(&self.entries)
    }
}

pub fn map_matrix(generator: &GeneratorMatrix, t: f64) -> Result<MapMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    Ok(MapMatrix::new(matrix_exponential(generator.entries(), t)?, t))
}

/// Closed-form map entries in printed-label coordinates.
pub fn printed_map_closed_form(rates: &DampingRates, t: f64) -> Superoperator {
    let e16 = |g: f64| (-16.0 * t * g).exp();
    let e32 = |g: f64| (-32.0 * t * g).exp();
    let (g1, g2) = (rates.gamma1, rates.gamma2);
    let mut f = Superoperator::zeros();
    f[(0, 0)] = 1.0;
    f[(6, 6)] = 1.0;
    for k in [2, 3, 14, 15] {
        f[(k - 1, k - 1)] = (e16(g1) + e16(g2)) / 2.0;
    }
    for (i, j) in [(2, 14), (3, 15), (14, 2), (15, 3)] {
        f[(i - 1, j - 1)] = (e16(g1) - e16(g2)) / 2.0;
    }
    for k in [5, 6, 8, 9, 10, 11, 12, 13] {
        f[(k - 1, k - 1)] = (-8.0 * t * (g1 + g2)).exp();
    }
    for k in [4, 16] {
        f[(k - 1, k - 1)] = (e32(g1) + e32(g2)) / 2.0;
    }
    f[(3, 15)] = (e32(g1) - e32(g2)) / 2.0;
    f[(15, 3)] = f[(3, 15)];
    f
}

pub type ChoiEntries = SMatrix<C64, 16, 16>;

/// Sₙₘ = Σᵣₛ Fᵣₛ tr(GᵣGₙGₛGₘ).
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    entries: ChoiEntries,
}

impl ChoiMatrix {
    pub fn new(entries: ChoiEntries) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &ChoiEntries {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(self.entries - self.entries.adjoint()))
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigh(&self.entries).0.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigh(&self.entries).0.min()
    }

    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        max_abs(&(self.entries - other.entries))
    }
}

/// Four-fold traces of the Pauli-product basis: for each (r, n, s) exactly one
/// m gives a nonzero trace; returns (m, tr(GᵣGₙGₛGₘ)).
fn fourfold_trace(r: usize, n: usize, s: usize) -> (usize, C64) {
    let (p1, a) = pauli_string_mul(r, n);
    let (p2, b) = pauli_string_mul(a, s);
    // σ_b σ_m ∝ I only for m = b; tr(σ_b σ_b) = 4 and each Gₖ carries 1/2
    (b, p1 * p2 * 0.25)
}

/// The basis argument is the fixed Pauli-product basis; traces are evaluated
/// from the Pauli multiplication table.
pub fn choi_from_map(map: &MapMatrix, _basis: &HermitianBasis) -> ChoiMatrix {
    let f = map.entries();
    let mut s = ChoiEntries::zeros();
    for r in 0..16 {
        for col in 0..16 {
            let frs = f[(r, col)];
            if frs == 0.0 {
                continue;
            }
            for n in 0..16 {
                let (m, tr) = fourfold_trace(r, n, col);
                s[(n, m)] += tr * frs;
            }
        }
    }
    ChoiMatrix::new(s)
}

/// Basis indices spanned by the diagonal operators K₇, K₈: I⊗I and I⊗σz.
pub const DIAGONAL_SECTOR: [usize; 2] = [0, 3];

pub fn in_diagonal_sector(index: usize) -> bool {
    DIAGONAL_SECTOR.contains(&index)
}

/// Σ KᵢKᵢ† split by sector, computed from the process matrix so that it does
/// not depend on how degenerate Kraus operators are mixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSums {
    /// Σ over the {I⊗I, I⊗σz} sector.
    pub diagonal: Operator,
    /// Σ over the remaining 14 basis elements.
    pub flips: Operator,
    /// Largest process-matrix entry coupling the two sectors.
    pub cross: f64,
}

pub fn sector_sums(choi: &ChoiMatrix, basis: &HermitianBasis) -> SectorSums {
    let s = choi.entries();
    let mut out = SectorSums { diagonal: Operator::zeros(), flips: Operator::zeros(), cross: 0.0 };
    for a in 0..16 {
        for b in 0..16 {
            // χ_ab = S_ba
            let chi = s[(b, a)];
            match (in_diagonal_sector(a), in_diagonal_sector(b)) {
                (true, true) => out.diagonal += basis.element(a) * basis.element(b) * chi,
                (false, false) => out.flips += basis.element(a) * basis.element(b) * chi,
                _ => out.cross = out.cross.max(chi.norm()),
            }
        }
    }
    out
}

/// Choi eigenvalues restricted to one sector, descending.
pub fn sector_weights(choi: &ChoiMatrix, diagonal: bool) -> Vec<f64> {
    let idx: Vec<usize> = (0..16).filter(|&i| in_diagonal_sector(i) == diagonal).collect();
    let block = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |i, j| choi.entries()[(idx[i], idx[j])]);
    let mut values: Vec<f64> = block.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Picture {
    #[default]
    Interaction,
    Schrodinger,
}

impl Picture {
    pub fn as_str(&self) -> &'static str {
        match self {
            Picture::Interaction => "interaction",
            Picture::Schrodinger => "schrodinger",
        }
    }
}

impl std::str::FromStr for Picture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interaction" => Ok(Picture::Interaction),
            "schrodinger" => Ok(Picture::Schrodinger),
            other => Err(Error::InvalidArgument(format!("unknown picture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    /// Choi eigenvalue (numeric) or ‖K‖²_F (closed form).
    pub weight: f64,
    pub op: Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<KrausOperator>,
    pub time: f64,
    pub picture: Picture,
}

impl KrausSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Operator> {
        self.operators.iter().map(|k| &k.op)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.operators.iter().map(|k| k.weight).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.operators.iter().filter(|k| k.weight > ZERO_WEIGHT).count()
    }

    /// ‖Σ K†K − I‖_max.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self.iter().fold(Operator::zeros(), |acc, k| acc + k.adjoint() * k);
        max_abs(&(sum - Operator::identity()))
    }

    /// ‖Σ KK† − I‖_max.
    pub fn unitality_residual(&self) -> f64 {
        let sum = self.iter().fold(Operator::zeros(), |acc, k| acc + k * k.adjoint());
        max_abs(&(sum - Operator::identity()))
    }

    /// ρ ↦ Σ KρK† on an arbitrary operator, no validation.
    pub fn apply_raw(&self, x: &Operator) -> Operator {
        self.iter().fold(Operator::zeros(), |acc, k| acc + k * x * k.adjoint())
    }
}

/// Hermitian eigendecomposition of S; Kᵢ = √dᵢ Σⱼ conj(Uⱼᵢ) Gⱼ.
///
/// S built by [`choi_from_map`] is the transpose of the process matrix χ in
/// Φ(ρ) = Σ χⱼₖ GⱼρGₖ, hence the conjugated eigenvector. The convention is
/// pinned by rebuilding F from the returned set.
///
/// When S is real (to [`REAL_CHOI_TOLERANCE`]) the real symmetric solver is
/// used, so every operator is a real combination of the Gⱼ and therefore
/// Hermitian; a complex solver would mix degenerate eigenvectors with
/// arbitrary phases.
pub fn kraus_from_choi(choi: &ChoiMatrix, basis: &HermitianBasis, tol: f64) -> Result<KrausSet> {
    let entries = choi.entries();
    let (values, vectors) = if entries.iter().all(|z| z.im.abs() <= REAL_CHOI_TOLERANCE) {
        let (values, vectors) = real_symmetric_eigh(&entries.map(|z| z.re));
        (values, vectors.map(|x| c(x, 0.0)))
    } else {
        hermitian_eigh(entries)
    };
    let min = values.min();
    if min < -tol {
        return Err(Error::NotCompletelyPositive { eigenvalue: min, tolerance: tol });
    }
    let operators = (0..16)
        .filter(|&k| values[k] > ZERO_WEIGHT)
        .map(|k| {
            let weight = values[k];
            let op = (0..16).fold(Operator::zeros(), |acc, j| acc + basis.element(j) * vectors[(j, k)].conj());
            KrausOperator { weight, op: op * c(weight.sqrt(), 0.0) }
        })
        .collect();
    Ok(KrausSet { operators, time: f64::NAN, picture: Picture::Interaction })
}

/// Choi matrix of a Kraus set, in the orientation produced by [`choi_from_map`].
pub fn choi_from_kraus(set: &KrausSet, basis: &HermitianBasis) -> ChoiMatrix {
    let mut s = ChoiEntries::zeros();
    for k in set.iter() {
        let coeffs = expand(k, basis);
        s += coeffs.conjugate() * coeffs.transpose();
    }
    ChoiMatrix::new(s)
}

/// Re-expands ρ ↦ Σ KρK† in the basis.
pub fn map_from_kraus(set: &KrausSet, basis: &HermitianBasis) -> Superoperator {
    let images: Vec<Operator> = basis.iter().map(|g| set.apply_raw(g)).collect();
    Superoperator::from_fn(|i, j| (basis.element(i) * images[j]).trace().re)
}

/// Full numeric pipeline at one instant: L → F(t) → S → Kraus set.
pub fn channel_at(generator: &GeneratorMatrix, t: f64, basis: &HermitianBasis, tol: f64) -> Result<KrausSet> {
    let map = map_matrix(generator, t)?;
    let choi = choi_from_map(&map, basis);
    let mut set = kraus_from_choi(&choi, basis, tol)?;
    set.time = t;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CptpReport {
    pub completeness: f64,
    pub unitality: f64,
    pub hermiticity: Vec<f64>,
    pub tolerance: f64,
}

impl CptpReport {
    pub fn max_hermiticity(&self) -> f64 {
        self.hermiticity.iter().copied().fold(0.0, f64::max)
    }

    pub fn trace_preserving(&self) -> bool {
        self.completeness <= self.tolerance
    }

    pub fn unital(&self) -> bool {
        self.unitality <= self.tolerance
    }

    pub fn hermitian(&self) -> bool {
        self.max_hermiticity() <= self.tolerance
    }

    /// Completeness and unitality; Hermiticity is informational.
    pub fn passes(&self) -> bool {
        self.trace_preserving() && self.unital()
    }
}

pub fn verify_cptp(set: &KrausSet) -> CptpReport {
    verify_cptp_with(set, CP_TOLERANCE)
}

pub fn verify_cptp_with(set: &KrausSet, tolerance: f64) -> CptpReport {
    CptpReport {
        completeness: set.completeness_residual(),
        unitality: set.unitality_residual(),
        hermiticity: set.iter().map(|k| max_abs(&(k - k.adjoint()))).collect(),
        tolerance,
    }
}

pub fn apply_map(set: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let residual = set.completeness_residual();
    if residual > APPLY_TOLERANCE {
        return Err(Error::ChannelInvalid { residual, tolerance: APPLY_TOLERANCE });
    }
    let out = hermitian_part(&set.apply_raw(rho.matrix()));
    DensityMatrix::with_tolerance(out, StateTolerance::EVOLVED)
}

/// e^{−itH} for Hermitian H.
pub fn unitary_propagator(h: &Operator, t: f64) -> Operator {
    let (values, vectors) = hermitian_eigh(h);
    let phases = Operator::from_diagonal(&values.map(|e| C64::from_polar(1.0, -e * t)));
    vectors * phases * vectors.adjoint()
}

/// Left-multiplies every operator by e^{−itH_sys}.
pub fn schrodinger_dress(set: &KrausSet, params: &ModelParams, t: f64) -> KrausSet {
    let u = unitary_propagator(&system_hamiltonian(params), t);
    KrausSet {
        operators: set
            .operators
            .iter()
            .map(|k| KrausOperator { weight: k.weight, op: u * k.op })
            .collect(),
        time: t,
        picture: Picture::Schrodinger,
    }
}
