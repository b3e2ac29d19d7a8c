//! Closed-form Kraus operators K₁…K₈ of the tabulated channel.
//!
//! K₁…K₆ are simple decaying prefactors times fixed matrices. K₇, K₈ are
//! diagonal with coefficients A, A′, B whose defining expressions contain
//! terms up to e^{280τ}; they are evaluated in log-magnitude arithmetic so
//! that no intermediate overflows.
//!
//! As printed, the last term of B² is 8e^{280τ}cosh(120Wτ); with it the
//! radicand of A is negative for every t > 0. Replacing that single term by
//! 8e^{56τ}cosh(24Wτ) ([`BFormula::Corrected`]) reproduces the numeric
//! channel to rounding error.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::Vector4;

use super::{choi_from_kraus, choi_from_map, in_diagonal_sector, map_matrix, sector_weights, ChoiMatrix, KrausOperator, KrausSet, Picture};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::generator::tabulated_generator;
use crate::model::DampingRates;
use crate::qops::{hermitian_basis, Operator};

/// Real number stored as sign · e^{ln}.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LogNum {
    sign: f64,
    ln: f64,
}

impl LogNum {
    const ZERO: Self = Self { sign: 0.0, ln: f64::NEG_INFINITY };

    fn exp(x: f64) -> Self {
        Self { sign: 1.0, ln: x }
    }

    fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self { sign: v.signum(), ln: v.abs().ln() }
        }
    }

    /// k · e^{y} · cosh(x)
    fn cosh_term(k: f64, y: f64, x: f64) -> Self {
        (Self::exp(y + x) + Self::exp(y - x)) * Self::from_f64(k / 2.0)
    }

    /// k · e^{y} · sinh(x)
    fn sinh_term(k: f64, y: f64, x: f64) -> Self {
        if x.abs() < 1.0 {
            return Self::exp(y) * Self::from_f64(k * x.sinh());
        }
        (Self::exp(y + x) - Self::exp(y - x)) * Self::from_f64(k / 2.0)
    }

    fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    fn to_f64(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    fn sqrt(self) -> Option<Self> {
        if self.sign < 0.0 {
            None
        } else if self.is_zero() {
            Some(Self::ZERO)
        } else {
            Some(Self { sign: 1.0, ln: self.ln / 2.0 })
        }
    }

    fn square(self) -> Self {
        self * self
    }
}

impl Add for LogNum {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.ln >= rhs.ln { (self, rhs) } else { (rhs, self) };
        let ratio = (small.ln - big.ln).exp();
        if big.sign == small.sign {
            Self { sign: big.sign, ln: big.ln + ratio.ln_1p() }
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            Self { sign: big.sign, ln: big.ln + (-ratio).ln_1p() }
        }
    }
}

impl Neg for LogNum {
    type Output = Self;
    fn neg(self) -> Self {
        Self { sign: -self.sign, ln: self.ln }
    }
}

impl Sub for LogNum {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for LogNum {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            Self::ZERO
        } else {
            Self { sign: self.sign * rhs.sign, ln: self.ln + rhs.ln }
        }
    }
}

impl Div for LogNum {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Self { sign: self.sign * rhs.sign, ln: self.ln - rhs.ln }
    }
}

/// Relative size under which a difference of equal-magnitude terms is zero.
const CANCELLATION: f64 = 1e-12;

/// Which last term enters B².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BFormula {
    /// 8e^{280τ}cosh(120Wτ), as printed.
    #[default]
    Printed,
    /// 8e^{56τ}cosh(24Wτ).
    Corrected,
}

impl BFormula {
    pub fn as_str(&self) -> &'static str {
        match self {
            BFormula::Printed => "printed",
            BFormula::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for BFormula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(BFormula::Printed),
            "corrected" => Ok(BFormula::Corrected),
            other => Err(Error::InvalidArgument(format!("unknown B formula {other:?}"))),
        }
    }
}

/// Coefficients of the diagonal operators, with τ = (γ₁+γ₂)t and
/// W = (γ₁−γ₂)/(γ₁+γ₂).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCoefficients {
    pub tau: f64,
    pub w: f64,
    /// ln B² (B² may overflow f64).
    pub ln_b_squared: f64,
    /// B as f64; infinite once it overflows.
    pub b: f64,
    pub formula: BFormula,
    /// Fraction of B² contributed by its last term.
    pub last_term_share: f64,
    /// B² without its last term, as f64.
    pub b_squared_without_last: f64,
    pub a: Option<f64>,
    pub a_prime: Option<f64>,
    /// Radicands of A and A′ (numerator/denominator), useful when they go negative.
    pub a_radicand: f64,
    pub a_prime_radicand: f64,
}

/// Closed-form operators at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticKraus {
    pub time: f64,
    pub coefficients: AnalyticCoefficients,
    /// K₁…K₆.
    pub flips: [Operator; 6],
    /// K₇, K₈, or the reason they could not be evaluated.
    pub diagonal: std::result::Result<[Operator; 2], Error>,
}

fn as_set(ops: impl IntoIterator<Item = Operator>, time: f64) -> KrausSet {
    KrausSet {
        operators: ops
            .into_iter()
            .map(|op| KrausOperator { weight: op.iter().map(|z| z.norm_sqr()).sum(), op })
            .collect(),
        time,
        picture: Picture::Interaction,
    }
}

impl AnalyticKraus {
    /// All eight operators, in order.
    pub fn kraus_set(&self) -> Result<KrausSet> {
        let diag = self.diagonal.clone()?;
        Ok(as_set(self.flips.iter().copied().chain(diag), self.time))
    }

    /// K₁…K₆ only.
    pub fn flip_set(&self) -> KrausSet {
        as_set(self.flips.iter().copied(), self.time)
    }

    /// Σ₁⁶ KᵢKᵢ.
    pub fn flip_square_sum(&self) -> Operator {
        self.flips.iter().fold(Operator::zeros(), |acc, k| acc + k * k)
    }
}

fn matrix(entries: [[C64; 4]; 4]) -> Operator {
    Operator::from_fn(|r, col| entries[r][col])
}

fn diagonal(values: [f64; 4]) -> Operator {
    Operator::from_diagonal(&Vector4::from_fn(|i, _| c(values[i], 0.0)))
}

fn flip_operators(rates: &DampingRates, t: f64) -> [Operator; 6] {
    let (g1, g2) = (rates.gamma1, rates.gamma2);
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let s2 = (-(-32.0 * t * g2).exp_m1()).sqrt() / 2.0;
    let s1 = (-(-32.0 * t * g1).exp_m1()).sqrt() / 2.0;
    let d2 = -(-16.0 * t * g2).exp_m1() / 2.0;
    let d1 = -(-16.0 * t * g1).exp_m1() / 2.0;
    [
        matrix([[z, z, z, z], [z, z, z, i], [z, z, z, z], [z, -i, z, z]]) * c(s2, 0.0),
        matrix([[z, z, z, z], [z, z, z, -one], [z, z, z, z], [z, -one, z, z]]) * c(s2, 0.0),
        matrix([[z, z, one, z], [z, z, z, z], [one, z, z, z], [z, z, z, z]]) * c(s1, 0.0),
        matrix([[z, z, -i, z], [z, z, z, z], [i, z, z, z], [z, z, z, z]]) * c(s1, 0.0),
        diagonal([0.0, -1.0, 0.0, 1.0]) * c(d2, 0.0),
        diagonal([1.0, 0.0, -1.0, 0.0]) * c(d1, 0.0),
    ]
}

/// √(num/den) with the τ → 0 limit 0/0 = 0 and cancellation noise treated as zero.
fn root_ratio(num: LogNum, num_scale: LogNum, den: LogNum, name: &str) -> std::result::Result<LogNum, Error> {
    let negligible = |x: LogNum| x.is_zero() || x.ln - num_scale.ln < CANCELLATION.ln();
    if negligible(num) {
        return Ok(LogNum::ZERO);
    }
    if den.is_zero() {
        return Err(Error::FormulaDomain(format!("{name}: zero denominator with nonzero numerator")));
    }
    match (num / den).sqrt() {
        Some(v) => Ok(v),
        None => Err(Error::FormulaDomain(format!(
            "{name}: negative radicand {:e}",
            (num / den).to_f64()
        ))),
    }
}

struct DiagonalParts {
    a: Option<f64>,
    a_prime: Option<f64>,
    a_radicand: f64,
    a_prime_radicand: f64,
    ops: std::result::Result<[Operator; 2], Error>,
}

/// W = 0 with B = 8e^{32τ}: A is 0/0. Along B − 8e^{32τ} = o(W) the limit is
/// K₇ = √N e^{8τ}/4 · I⊗σz with N = 2(e^{−8τ} − e^{−16τ})², and
/// K₈ = −e^{8τ}/4 · √(2e^{−16τ} + 2e^{−32τ} + 12e^{−24τ}) · I.
fn equal_rates_limit(tau: f64) -> DiagonalParts {
    let e = |k: f64| (k * tau).exp();
    let k7 = -std::f64::consts::SQRT_2 * (-8.0 * tau).exp_m1() / 4.0;
    let k8 = -(2.0 + 2.0 * e(-16.0) + 12.0 * e(-8.0)).sqrt() / 4.0;
    DiagonalParts {
        a: None,
        a_prime: None,
        a_radicand: f64::NAN,
        a_prime_radicand: f64::NAN,
        ops: Ok([diagonal([k7, -k7, k7, -k7]), diagonal([k8; 4])]),
    }
}

/// K₇, K₈ from the A, A′ expressions for a given B.
fn diagonal_from_b(tau: f64, w: f64, b: LogNum) -> DiagonalParts {
    let wt = w * tau;
    let e = |k: f64| LogNum::exp(k * tau);
    let n = LogNum::from_f64;
    let sh = LogNum::sinh_term(2.0, 24.0 * tau, 16.0 * wt) + LogNum::sinh_term(4.0, 32.0 * tau, 8.0 * wt);
    let numer_common = n(2.0) * e(-16.0)
        + LogNum::cosh_term(2.0, -32.0 * tau, 16.0 * wt)
        + LogNum::cosh_term(4.0, -24.0 * tau, 8.0 * wt);
    let shift = e(-56.0) * b;
    let den_common = n(16.0)
        * (LogNum::sinh_term(2.0, 16.0 * tau, 16.0 * wt) + LogNum::sinh_term(4.0, 24.0 * tau, 8.0 * wt)).square();
    let eight = n(8.0) * e(32.0);
    if tau > 0.0 && den_common.is_zero() && ((b - eight).is_zero() || (b - eight).ln - b.ln < CANCELLATION.ln()) {
        return equal_rates_limit(tau);
    }
    let num_a = numer_common - shift;
    let den_a = den_common + n(16.0) * e(-16.0) * (b - eight).square();
    let num_ap = numer_common + shift;
    let den_ap = den_common + n(16.0) * e(-16.0) * (b + eight).square();

    let a = root_ratio(num_a, numer_common, den_a, "A");
    let a_prime = root_ratio(num_ap, numer_common, den_ap, "A′");
    DiagonalParts {
        a: a.as_ref().ok().map(|v| v.to_f64()),
        a_prime: a_prime.as_ref().ok().map(|v| v.to_f64()),
        a_radicand: (num_a / den_a).to_f64(),
        a_prime_radicand: (num_ap / den_ap).to_f64(),
        ops: a.and_then(|a| a_prime.map(|ap| (a, ap))).map(|(a, ap)| {
            let k7_odd = (a * (-eight + sh + b)).to_f64();
            let k7_even = (a * (-eight - sh + b)).to_f64();
            let k8_odd = (-(ap * (eight - sh + b))).to_f64();
            let k8_even = (-(ap * (eight + sh + b))).to_f64();
            [
                diagonal([k7_odd, k7_even, k7_odd, k7_even]),
                diagonal([k8_odd, k8_even, k8_odd, k8_even]),
            ]
        }),
    }
}

/// B + x given B² − x² = `gap`, without subtracting nearly equal numbers.
fn b_plus(b: LogNum, x: LogNum, gap: LogNum) -> LogNum {
    if x.sign >= 0.0 {
        b + x
    } else {
        gap / (b - x)
    }
}

/// K₇, K₈ for the corrected B, with every cancelling difference rewritten
/// in closed form:
/// B² = 64e^{64τ} + R², R = 4e^{24τ} sinh(8Wτ)(cosh 8Wτ + e^{8τ}),
/// B² − (8e^{32τ} ∓ sh)² = ±16e^{32τ}R,
/// n² − e^{−112τ}B² = 64e^{−48τ}(sinh²4Wτ + sinh²4τ)(cosh²4Wτ + cosh²4τ).
fn diagonal_corrected(tau: f64, w: f64) -> (LogNum, DiagonalParts) {
    let wt = w * tau;
    let e = |k: f64| LogNum::exp(k * tau);
    let n = LogNum::from_f64;
    let eight = n(8.0) * e(32.0);
    let r = LogNum::sinh_term(4.0, 24.0 * tau, 8.0 * wt) * (LogNum::cosh_term(1.0, 0.0, 8.0 * wt) + e(8.0));
    let b = (eight.square() + r.square()).sqrt().expect("sum of squares");
    let sh = LogNum::sinh_term(2.0, 24.0 * tau, 16.0 * wt) + LogNum::sinh_term(4.0, 32.0 * tau, 8.0 * wt);
    let s = LogNum::sinh_term(2.0, 16.0 * tau, 16.0 * wt) + LogNum::sinh_term(4.0, 24.0 * tau, 8.0 * wt);
    let den_common = n(16.0) * s.square();
    if tau > 0.0 && den_common.is_zero() {
        return (b, equal_rates_limit(tau));
    }
    let numer_common = n(2.0) * e(-16.0)
        + LogNum::cosh_term(2.0, -32.0 * tau, 16.0 * wt)
        + LogNum::cosh_term(4.0, -24.0 * tau, 8.0 * wt);
    let shift = e(-56.0) * b;
    let sq = |x: LogNum| x.square();
    let product = n(64.0)
        * e(-48.0)
        * (sq(LogNum::sinh_term(1.0, 0.0, 4.0 * wt)) + sq(LogNum::sinh_term(1.0, 0.0, 4.0 * tau)))
        * (sq(LogNum::cosh_term(1.0, 0.0, 4.0 * wt)) + sq(LogNum::cosh_term(1.0, 0.0, 4.0 * tau)));
    let num_a = product / (numer_common + shift);
    let num_ap = numer_common + shift;
    let b_minus_eight = r.square() / (b + eight);
    let den_a = den_common + n(16.0) * e(-16.0) * b_minus_eight.square();
    let den_ap = den_common + n(16.0) * e(-16.0) * (b + eight).square();

    let gap = n(16.0) * e(32.0) * r;
    let x_odd = eight - sh;
    let x_even = eight + sh;
    // B − x = B + (−x), with B² − x² unchanged.
    let k7_odd_factor = b_plus(b, -x_odd, gap);
    let k7_even_factor = b_plus(b, -x_even, -gap);
    let k8_odd_factor = b_plus(b, x_odd, gap);
    let k8_even_factor = b_plus(b, x_even, -gap);

    let a = root_ratio(num_a, num_a, den_a, "A");
    let a_prime = root_ratio(num_ap, num_ap, den_ap, "A′");
    let parts = DiagonalParts {
        a: a.as_ref().ok().map(|v| v.to_f64()),
        a_prime: a_prime.as_ref().ok().map(|v| v.to_f64()),
        a_radicand: (num_a / den_a).to_f64(),
        a_prime_radicand: (num_ap / den_ap).to_f64(),
        ops: a.and_then(|a| a_prime.map(|ap| (a, ap))).map(|(a, ap)| {
            let k7_odd = (a * k7_odd_factor).to_f64();
            let k7_even = (a * k7_even_factor).to_f64();
            let k8_odd = (-(ap * k8_odd_factor)).to_f64();
            let k8_even = (-(ap * k8_even_factor)).to_f64();
            [
                diagonal([k7_odd, k7_even, k7_odd, k7_even]),
                diagonal([k8_odd, k8_even, k8_odd, k8_even]),
            ]
        }),
    };
    (b, parts)
}

/// K₁…K₈ at time `t` with B as printed, exposing K₇/K₈ failures instead of aborting.
pub fn analytic_kraus_parts(rates: &DampingRates, t: f64) -> Result<AnalyticKraus> {
    analytic_kraus_parts_with(rates, t, BFormula::Printed)
}

pub fn analytic_kraus_parts_with(rates: &DampingRates, t: f64, formula: BFormula) -> Result<AnalyticKraus> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let sum = rates.sum();
    if !(sum > 0.0) {
        return Err(Error::InvalidArgument("γ₁ + γ₂ must be positive".into()));
    }
    let tau = sum * t;
    let w = (rates.gamma1 - rates.gamma2) / sum;
    let wt = w * tau;
    let e = |k: f64| LogNum::exp(k * tau);
    let n = LogNum::from_f64;

    let last = match formula {
        BFormula::Printed => LogNum::cosh_term(8.0, 280.0 * tau, 120.0 * wt),
        BFormula::Corrected => LogNum::cosh_term(8.0, 56.0 * tau, 24.0 * wt),
    };
    let rest = n(56.0) * e(64.0) - n(2.0) * e(48.0) + LogNum::cosh_term(2.0, 48.0 * tau, 32.0 * wt)
        - LogNum::cosh_term(8.0, 56.0 * tau, 8.0 * wt)
        + LogNum::cosh_term(8.0, 64.0 * tau, 16.0 * wt);
    let b_sq = rest + last;

    let mut coefficients = AnalyticCoefficients {
        tau,
        w,
        ln_b_squared: if b_sq.is_zero() { f64::NEG_INFINITY } else { b_sq.ln },
        b: f64::NAN,
        formula,
        last_term_share: (last / b_sq).to_f64(),
        b_squared_without_last: rest.to_f64(),
        a: None,
        a_prime: None,
        a_radicand: f64::NAN,
        a_prime_radicand: f64::NAN,
    };
    let flips = flip_operators(rates, t);

    if formula == BFormula::Corrected {
        let (b, diag) = diagonal_corrected(tau, w);
        coefficients.b = b.to_f64();
        coefficients.ln_b_squared = 2.0 * b.ln;
        coefficients.a_radicand = diag.a_radicand;
        coefficients.a_prime_radicand = diag.a_prime_radicand;
        coefficients.a = diag.a;
        coefficients.a_prime = diag.a_prime;
        return Ok(AnalyticKraus { time: t, coefficients, flips, diagonal: diag.ops });
    }

    let Some(b) = b_sq.sqrt() else {
        let err = Error::FormulaDomain(format!("B² = {:e} is negative", b_sq.to_f64()));
        return Ok(AnalyticKraus { time: t, coefficients, flips, diagonal: Err(err) });
    };
    coefficients.b = b.to_f64();

    let diag = diagonal_from_b(tau, w, b);
    coefficients.a_radicand = diag.a_radicand;
    coefficients.a_prime_radicand = diag.a_prime_radicand;
    coefficients.a = diag.a;
    coefficients.a_prime = diag.a_prime;
    let diagonal_ops = diag.ops;
    Ok(AnalyticKraus { time: t, coefficients, flips, diagonal: diagonal_ops })
}

/// K₁…K₈ as a Kraus set; fails with a formula-domain error when K₇/K₈ are
/// not evaluable.
pub fn analytic_kraus(rates: &DampingRates, t: f64) -> Result<KrausSet> {
    analytic_kraus_parts(rates, t)?.kraus_set()
}

pub fn analytic_kraus_with(rates: &DampingRates, t: f64, formula: BFormula) -> Result<KrausSet> {
    analytic_kraus_parts_with(rates, t, formula)?.kraus_set()
}

/// Closed-form channel against the numeric one at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticComparison {
    pub time: f64,
    pub coefficients: AnalyticCoefficients,
    /// ‖Kᵢ‖²_F for K₁…K₆, descending.
    pub flip_weights_analytic: Vec<f64>,
    /// Numeric Choi eigenvalues of the 14-element flip sector, descending.
    pub flip_weights_numeric: Vec<f64>,
    /// Largest weight mismatch (analytic list padded with zeros).
    pub flip_weight_error: f64,
    /// Max-entry Choi distance restricted to the flip sector.
    pub flip_choi_distance: f64,
    /// Numeric Choi eigenvalues of the {I⊗I, I⊗σz} sector, descending.
    pub diagonal_weights_numeric: Vec<f64>,
    /// Full max-entry Choi distance, when K₇/K₈ are evaluable.
    pub choi_distance: Option<f64>,
    pub diagonal_error: Option<Error>,
    /// B that reproduces the numeric K₈ weight through the A′ expression.
    pub implied_b: Option<f64>,
    /// Full Choi distance after substituting the implied B into A, A′, K₇, K₈;
    /// small values confine the defect to the B expression.
    pub choi_distance_implied_b: Option<f64>,
    /// Full Choi distance with [`BFormula::Corrected`].
    pub choi_distance_corrected: Option<f64>,
    pub corrected_error: Option<Error>,
}

impl AnalyticComparison {
    pub fn flip_sector_matches(&self, tol: f64) -> bool {
        self.flip_weight_error <= tol && self.flip_choi_distance <= tol
    }
}

/// Weight ‖K₈‖²_F as a function of a free B, other coefficients as printed.
fn k8_weight(tau: f64, w: f64, b: f64) -> f64 {
    let e = |k: f64| (k * tau).exp();
    let wt = w * tau;
    let sh = 2.0 * e(24.0) * (16.0 * wt).sinh() + 4.0 * e(32.0) * (8.0 * wt).sinh();
    let s = 2.0 * e(16.0) * (16.0 * wt).sinh() + 4.0 * e(24.0) * (8.0 * wt).sinh();
    let numer = 2.0 * e(-16.0) + 2.0 * e(-32.0) * (16.0 * wt).cosh() + 4.0 * e(-24.0) * (8.0 * wt).cosh() + e(-56.0) * b;
    let denom = 16.0 * s * s + 16.0 * e(-16.0) * (b + 8.0 * e(32.0)).powi(2);
    let a2 = numer / denom;
    2.0 * a2 * ((8.0 * e(32.0) - sh + b).powi(2) + (8.0 * e(32.0) + sh + b).powi(2))
}

/// Smallest B ≥ 0 with k8_weight(B) = target, by bracketing then bisection.
fn solve_implied_b(tau: f64, w: f64, target: f64) -> Option<f64> {
    if !(56.0 * tau < 600.0) {
        return None;
    }
    let f = |b: f64| k8_weight(tau, w, b) - target;
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    let mut hi = 1e-3;
    while hi < 1e300 {
        let f_hi = f(hi);
        if !f_hi.is_finite() {
            return None;
        }
        if f_lo.signum() != f_hi.signum() {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == f_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
    }
    None
}

fn flip_sector_distance(a: &ChoiMatrix, b: &ChoiMatrix) -> f64 {
    let (a, b) = (a.entries(), b.entries());
    let mut worst = 0.0f64;
    for i in (0..16).filter(|&i| !in_diagonal_sector(i)) {
        for j in (0..16).filter(|&j| !in_diagonal_sector(j)) {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Compares K₁…K₈ with the Kraus decomposition of e^{Lt} for the tabulated generator.
pub fn compare_analytic(rates: &DampingRates, t: f64) -> Result<AnalyticComparison> {
    let basis = hermitian_basis();
    let parts = analytic_kraus_parts(rates, t)?;
    let numeric = choi_from_map(&map_matrix(&tabulated_generator(rates), t)?, &basis);

    let mut flip_weights_analytic = parts.flip_set().weights();
    flip_weights_analytic.sort_by(|a, b| b.total_cmp(a));
    let flip_weights_numeric = sector_weights(&numeric, false);
    let flip_weight_error = flip_weights_numeric
        .iter()
        .enumerate()
        .map(|(i, v)| (v - flip_weights_analytic.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    let flip_choi_distance = flip_sector_distance(&choi_from_kraus(&parts.flip_set(), &basis), &numeric);
    let diagonal_weights_numeric = sector_weights(&numeric, true);

    let (choi_distance, diagonal_error) = match parts.kraus_set() {
        Ok(set) => (Some(choi_from_kraus(&set, &basis).distance(&numeric)), None),
        Err(e) => (None, Some(e)),
    };
    let co = &parts.coefficients;
    let implied_b = solve_implied_b(co.tau, co.w, diagonal_weights_numeric[0]);
    let (choi_distance_corrected, corrected_error) = match analytic_kraus_with(rates, t, BFormula::Corrected) {
        Ok(set) => (Some(choi_from_kraus(&set, &basis).distance(&numeric)), None),
        Err(e) => (None, Some(e)),
    };
    let choi_distance_implied_b = implied_b.and_then(|b| {
        let ops = diagonal_from_b(co.tau, co.w, LogNum::from_f64(b)).ops.ok()?;
        let set = as_set(parts.flips.iter().copied().chain(ops), t);
        Some(choi_from_kraus(&set, &basis).distance(&numeric))
    });
    Ok(AnalyticComparison {
        time: t,
        coefficients: parts.coefficients.clone(),
        flip_weights_analytic,
        flip_weights_numeric,
        flip_weight_error,
        flip_choi_distance,
        diagonal_weights_numeric,
        choi_distance,
        diagonal_error,
        implied_b,
        choi_distance_implied_b,
        choi_distance_corrected,
        corrected_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn rates() -> DampingRates {
        DampingRates::new(17.2, 36.4).unwrap()
    }

    #[test]
    fn lognum_arithmetic() {
        let a = LogNum::from_f64(3.0);
        let b = LogNum::from_f64(-5.0);
        assert!(((a + b).to_f64() + 2.0).abs() < 1e-14);
        assert!(((a * b).to_f64() + 15.0).abs() < 1e-13);
        assert!(((b / a).to_f64() + 5.0 / 3.0).abs() < 1e-14);
        assert!((a - a).is_zero());
        assert!(b.sqrt().is_none());
        let huge = LogNum::exp(900.0) * LogNum::exp(-899.0);
        assert!((huge.to_f64() - std::f64::consts::E).abs() < 1e-12);
        assert!((LogNum::cosh_term(2.0, 0.0, 1.0).to_f64() - 2.0 * 1f64.cosh()).abs() < 1e-14);
        assert!((LogNum::sinh_term(3.0, 0.5, -0.7).to_f64() - 3.0 * 0.5f64.exp() * (-0.7f64).sinh()).abs() < 1e-14);
    }

    #[test]
    fn zero_time_anchor_values() {
        let parts = analytic_kraus_parts(&rates(), 0.0).unwrap();
        let co = &parts.coefficients;
        assert!((co.b - 8.0).abs() < 1e-13);
        assert_eq!(co.a, Some(0.0));
        assert!((co.a_prime.unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let set = parts.kraus_set().unwrap();
        assert_eq!(set.len(), 8);
        for k in set.iter().take(7) {
            assert_eq!(max_abs(k), 0.0);
        }
        assert!(max_abs(&(set.operators[7].op + Operator::identity())) < 1e-14);
    }

    #[test]
    fn flip_operators_are_hermitian_with_paired_weights() {
        let parts = analytic_kraus_parts(&rates(), 3e-3).unwrap();
        for k in &parts.flips {
            assert!(max_abs(&(k - k.adjoint())) < 1e-15);
        }
        let w = parts.flip_set().weights();
        assert!((w[0] - w[1]).abs() < 1e-15 && (w[2] - w[3]).abs() < 1e-15);
    }

    #[test]
    fn large_time_flip_sum() {
        // pairs (K1,K2,K5) and (K3,K4,K6) each tend to 3/4 of a rank-2 projector
        let parts = analytic_kraus_parts(&rates(), 10.0).unwrap();
        let sum = parts.flip_square_sum();
        assert!(max_abs(&(sum - Operator::identity() * c(0.75, 0.0))) < 1e-14);
    }

    #[test]
    fn no_overflow_for_large_tau() {
        let parts = analytic_kraus_parts(&rates(), 1.0).unwrap();
        let co = &parts.coefficients;
        assert!(co.ln_b_squared.is_finite());
        assert!((co.last_term_share - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_time_comparison_is_exact() {
        let cmp = compare_analytic(&rates(), 0.0).unwrap();
        assert!(cmp.choi_distance.unwrap() < 1e-13);
        assert!((cmp.implied_b.unwrap() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn flip_sector_agrees_with_numeric_channel() {
        for t in [1e-5, 1e-3, 2e-2] {
            let cmp = compare_analytic(&rates(), t).unwrap();
            assert!(cmp.flip_sector_matches(1e-12), "t = {t}: {cmp:?}");
        }
    }

    #[test]
    fn defect_is_confined_to_b() {
        // with B fitted to the numeric K₈ weight, K₁…K₈ reproduce the channel
        for r in [rates(), DampingRates::new(25.0, 25.01).unwrap()] {
            for t in [1e-5, 1e-4, 1e-3, 3e-3] {
                let cmp = compare_analytic(&r, t).unwrap();
                assert!(cmp.diagonal_error.is_some());
                let d = cmp.choi_distance_implied_b.unwrap();
                assert!(d < 1e-10, "t = {t}: {d:e}");
                assert!((cmp.implied_b.unwrap() - cmp.coefficients.b).abs() > 1e-3);
            }
        }
    }

    #[test]
    fn corrected_formula_matches_numeric_channel() {
        let swapped = DampingRates::new(36.4, 17.2).unwrap();
        let near = DampingRates::new(25.0, 25.0 + 1e-9).unwrap();
        for r in [rates(), swapped, DampingRates::new(25.0, 25.0).unwrap(), near] {
            for t in [0.0, 1e-5, 1e-3, 3e-3, 2e-2, 0.3, 1.0, 5.0] {
                let cmp = compare_analytic(&r, t).unwrap();
                assert!(cmp.corrected_error.is_none(), "{r:?} t = {t}: {:?}", cmp.corrected_error);
                let d = cmp.choi_distance_corrected.unwrap();
                assert!(d < 1e-10, "{r:?} t = {t}: {d:e}");
            }
        }
    }

    #[test]
    fn corrected_and_printed_agree_at_zero_time() {
        let a = analytic_kraus_with(&rates(), 0.0, BFormula::Corrected).unwrap();
        let b = analytic_kraus(&rates(), 0.0).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!(max_abs(&(x - y)) < 1e-14);
        }
    }

    #[test]
    fn equal_rates_need_b_at_removable_point() {
        // W = 0: the fitted B sits at 8e^{32τ}, where A is 0/0
        let cmp = compare_analytic(&DampingRates::new(25.0, 25.0).unwrap(), 1e-3).unwrap();
        let eight = 8.0 * (32.0 * cmp.coefficients.tau).exp();
        assert!((cmp.implied_b.unwrap() - eight).abs() < 1e-9 * eight);
    }

    #[test]
    fn k8_weight_at_printed_b() {
        // at τ = 0 the printed A′ and B give ‖K₈‖² = ‖−I‖² = 4
        assert!((k8_weight(0.0, 0.3, 8.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(analytic_kraus_parts(&rates(), -1.0).is_err());
        assert!(analytic_kraus_parts(&DampingRates::new(0.0, 0.0).unwrap(), 1.0).is_err());
    }
}
