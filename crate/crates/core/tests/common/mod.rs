#![allow(dead_code)]

use qpair_kraus::linalg::{c, C64};
use qpair_kraus::qops::{pauli, DensityMatrix, Operator, QubitOperator};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry(rng: &mut impl Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// GG†/tr for a random G with uniform entries; full rank with probability 1.
pub fn random_state(rng: &mut impl Rng) -> DensityMatrix {
    let g = Operator::from_fn(|_, _| entry(rng));
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("Ginibre state is valid")
}

pub fn random_qubit_state(rng: &mut impl Rng) -> QubitOperator {
    let g = QubitOperator::from_fn(|_, _| entry(rng));
    let m = g * g.adjoint();
    m / m.trace()
}

/// exp(i n·σ) for a random vector n.
pub fn random_qubit_unitary(rng: &mut impl Rng) -> QubitOperator {
    let n: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let mut u = QubitOperator::identity() * c(len.cos(), 0.0);
    for (k, nk) in n.iter().enumerate() {
        u += pauli(k + 1).unwrap() * c(0.0, len.sin() * nk / len);
    }
    u
}

pub fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}
