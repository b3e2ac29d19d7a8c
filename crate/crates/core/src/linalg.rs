//! Small dense linear-algebra helpers shared by the channel code.

use nalgebra::{DMatrix, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn max_abs<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn hermitian_part<const N: usize>(m: &SMatrix<C64, N, N>) -> SMatrix<C64, N, N> {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Column `k` of the returned unitary is the eigenvector of eigenvalue `k`.
pub fn hermitian_eigh<const N: usize>(
    m: &SMatrix<C64, N, N>,
) -> (SVector<f64, N>, SMatrix<C64, N, N>) {
    // dynamic storage: the decompositions are not available for generic const dims
    let eig = DMatrix::from_column_slice(N, N, hermitian_part(m).as_slice()).symmetric_eigen();
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = SVector::<f64, N>::from_fn(|k, _| eig.eigenvalues[order[k]]);
    let vectors = SMatrix::<C64, N, N>::from_fn(|i, k| eig.eigenvectors[(i, order[k])]);
    (values, vectors)
}

/// Real symmetric counterpart of [`hermitian_eigh`].
pub fn real_symmetric_eigh<const N: usize>(m: &SMatrix<f64, N, N>) -> (SVector<f64, N>, SMatrix<f64, N, N>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = DMatrix::from_column_slice(N, N, sym.as_slice()).symmetric_eigen();
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = SVector::<f64, N>::from_fn(|k, _| eig.eigenvalues[order[k]]);
    let vectors = SMatrix::<f64, N, N>::from_fn(|i, k| eig.eigenvectors[(i, order[k])]);
    (values, vectors)
}

/// Hermitian eigenvalues, sorted descending.
pub fn hermitian_eigenvalues<const N: usize>(m: &SMatrix<C64, N, N>) -> SVector<f64, N> {
    hermitian_eigh(m).0
}

/// Trace distance ½‖a − b‖₁ between two Hermitian matrices.
pub fn trace_distance<const N: usize>(a: &SMatrix<C64, N, N>, b: &SMatrix<C64, N, N>) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|v| v.abs()).sum::<f64>()
}

fn one_norm<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA: [(f64, usize); 4] = [
    (1.495585217958292e-2, 3),
    (2.53939833006323e-1, 5),
    (9.504178996162932e-1, 7),
    (2.097847961257068, 9),
];
const THETA13: f64 = 5.371920351148152;

/// `exp(m·t)` by scaling and squaring with diagonal Padé approximants
/// (degree 3 to 13, chosen from the 1-norm).
pub fn matrix_exponential<const N: usize>(m: &SMatrix<f64, N, N>, t: f64) -> Result<SMatrix<f64, N, N>> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite time {t}")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let a = m * t;
    let norm = one_norm(&a);
    let ident = SMatrix::<f64, N, N>::identity();
    if norm == 0.0 {
        return Ok(ident);
    }

    for &(theta, degree) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(&a, coeffs);
        }
    }

    let squarings = ((norm / THETA13).log2().ceil().max(0.0)) as i32;
    let scaled = a / 2f64.powi(squarings);
    let mut r = pade13(&scaled)?;
    for _ in 0..squarings {
        r = r * r;
    }
    Ok(r)
}

fn pade_low<const N: usize>(a: &SMatrix<f64, N, N>, b: &[f64]) -> Result<SMatrix<f64, N, N>> {
    let ident = SMatrix::<f64, N, N>::identity();
    let a2 = a * a;
    let mut even = ident * b[0];
    let mut odd = ident * b[1];
    let mut power = ident;
    for k in 1..b.len() / 2 {
        power *= a2;
        even += power * b[2 * k];
        odd += power * b[2 * k + 1];
    }
    let u = a * odd;
    solve_pade(&even, &u)
}

fn pade13<const N: usize>(a: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    let b = &PADE13;
    let ident = SMatrix::<f64, N, N>::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let inner_u = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]);
    let u = a * (inner_u + a6 * b[7] + a4 * b[5] + a2 * b[3] + ident * b[1]);
    let inner_v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]);
    let v = inner_v + a6 * b[6] + a4 * b[4] + a2 * b[2] + ident * b[0];
    solve_pade(&v, &u)
}

fn solve_pade<const N: usize>(v: &SMatrix<f64, N, N>, u: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    let lhs = DMatrix::from_column_slice(N, N, (v - u).as_slice());
    let rhs = DMatrix::from_column_slice(N, N, (v + u).as_slice());
    lhs.lu()
        .solve(&rhs)
        .map(|x| SMatrix::from_column_slice(x.as_slice()))
        .ok_or_else(|| Error::InvalidArgument("singular Padé denominator".into()))
}
