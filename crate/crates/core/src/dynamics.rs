//! Trajectories, concurrence and entanglement sudden death.

use nalgebra::{DMatrix, SVector};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::generator::{tabulated_generator, GeneratorMatrix};
use crate::kraus::{apply_map, channel_at, schrodinger_dress, unitary_propagator, Picture, CP_TOLERANCE};
use crate::linalg::{c, hermitian_eigh, hermitian_part};
use crate::model::{damping_rates, system_hamiltonian, DampingRates, ModelParams};
use crate::qops::{expand, hermitian_basis, pauli_string, reconstruct, DensityMatrix, HermitianBasis, Operator, StateTolerance};

/// Largest RK4 step as a fraction of 1/‖L‖∞.
pub const RK4_STEP_FACTOR: f64 = 0.02;
/// Refuse to integrate when one interval needs more steps than this.
pub const MAX_RK4_STEPS: f64 = 1e8;
/// Coarse samples used to bracket the first zero of Λ.
pub const ESD_SCAN_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Kraus,
    Integrator,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Kraus => "kraus",
            Source::Integrator => "integrator",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub concurrence: Vec<f64>,
    pub source: Source,
    pub picture: Picture,
}

impl Trajectory {
    fn new(times: &[f64], states: Vec<DensityMatrix>, source: Source, picture: Picture) -> Self {
        let concurrence = states.iter().map(concurrence).collect();
        Self { times: times.to_vec(), states, concurrence, source, picture }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest trace distance to another trajectory sampled at the same times.
    pub fn max_trace_distance(&self, other: &Trajectory) -> f64 {
        self.states.iter().zip(&other.states).map(|(a, b)| a.trace_distance(b)).fold(0.0, f64::max)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::InvalidArgument("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => return Err(Error::InvalidArgument(format!("time grid must start at 0, got {t0}"))),
        _ => {}
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn real_coefficients(rho: &DensityMatrix, basis: &HermitianBasis) -> SVector<f64, 16> {
    expand(rho.matrix(), basis).map(|z| z.re)
}

fn state_from(coeffs: &SVector<f64, 16>, basis: &HermitianBasis) -> Result<DensityMatrix> {
    let m = reconstruct(&coeffs.map(|x| c(x, 0.0)), basis);
    DensityMatrix::with_tolerance(hermitian_part(&m), StateTolerance::EVOLVED)
}

/// Classical RK4 on the coefficient vector, dc/dt = L c, interaction picture.
pub fn integrate_master_equation(generator: &GeneratorMatrix, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let basis = hermitian_basis();
    let l = generator.entries();
    let norm = generator.norm_inf();
    let h_max = if norm > 0.0 { RK4_STEP_FACTOR / norm } else { f64::INFINITY };
    let mut coeffs = real_coefficients(rho0, &basis);
    let mut states = vec![rho0.clone()];
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let steps = (dt / h_max).ceil().max(1.0);
        if steps > MAX_RK4_STEPS {
            return Err(Error::Configuration(format!(
                "RK4 step underflow: {steps:e} steps needed for ‖L‖ = {norm:e}"
            )));
        }
        let h = dt / steps;
        for _ in 0..steps as u64 {
            let k1 = l * coeffs;
            let k2 = l * (coeffs + k1 * (h / 2.0));
            let k3 = l * (coeffs + k2 * (h / 2.0));
            let k4 = l * (coeffs + k3 * h);
            coeffs += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        states.push(state_from(&coeffs, &basis)?);
    }
    Ok(Trajectory::new(times, states, Source::Integrator, Picture::Interaction))
}

/// e^{−iHt} ρ e^{iHt}: moves an interaction-picture state to the Schrödinger picture.
pub fn to_schrodinger(rho: &DensityMatrix, params: &ModelParams, t: f64) -> Result<DensityMatrix> {
    let u = unitary_propagator(&system_hamiltonian(params), t);
    DensityMatrix::with_tolerance(hermitian_part(&(u * rho.matrix() * u.adjoint())), StateTolerance::EVOLVED)
}

fn kraus_state(
    generator: &GeneratorMatrix,
    params: &ModelParams,
    rho0: &DensityMatrix,
    t: f64,
    picture: Picture,
    basis: &HermitianBasis,
) -> Result<DensityMatrix> {
    let set = channel_at(generator, t, basis, CP_TOLERANCE)?;
    let set = match picture {
        Picture::Interaction => set,
        Picture::Schrodinger => schrodinger_dress(&set, params, t),
    };
    apply_map(&set, rho0)
}

/// ρ(t) = Σ Kᵢ(t) ρ₀ Kᵢ(t)† with Kraus operators rebuilt at every sample.
pub fn evolve_kraus(params: &ModelParams, rho0: &DensityMatrix, times: &[f64], picture: Picture) -> Result<Trajectory> {
    check_times(times)?;
    let generator = tabulated_generator(&damping_rates(params)?);
    let basis = hermitian_basis();
    let states = times
        .iter()
        .map(|&t| kraus_state(&generator, params, rho0, t, picture, &basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(times, states, Source::Kraus, picture))
}

/// σy⊗σy ρ* σy⊗σy, conjugation in the product basis.
pub fn spin_flip(rho: &Operator) -> Operator {
    let yy = pauli_string(2, 2);
    yy * rho.conjugate() * yy
}

/// Eigenvalues of ρ below this fraction of the largest are rounding noise.
const RANK_TOLERANCE: f64 = 16.0 * f64::EPSILON;

/// Λ = √λ₁ − √λ₂ − √λ₃ − √λ₄, λ the eigenvalues of ρρ̃. With ρ = WW†,
/// √λᵢ are the singular values of T = Wᵀ(σy⊗σy)W, which avoids taking
/// square roots of λ near zero.
pub fn concurrence_lambda(rho: &DensityMatrix) -> f64 {
    let (p, v) = hermitian_eigh(rho.matrix());
    let cutoff = RANK_TOLERANCE * p[0].max(0.0);
    let w = v * Operator::from_diagonal(&p.map(|x| c(if x > cutoff { x.sqrt() } else { 0.0 }, 0.0)));
    let t = w.transpose() * pauli_string(2, 2) * w;
    let mut sv: Vec<f64> = DMatrix::from_column_slice(4, 4, t.as_slice()).svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv[0] - sv[1] - sv[2] - sv[3]
}

/// Wootters concurrence max(0, Λ).
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    concurrence_lambda(rho).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsdResult {
    pub esd_time: Option<f64>,
    pub bracket: (f64, f64),
    pub lambda_at_bracket: (f64, f64),
}

/// 5/(16·min γ): all decay exponents of the channel are well saturated.
pub fn default_t_max(rates: &DampingRates) -> f64 {
    5.0 / (16.0 * rates.min())
}

/// First zero of Λ(t) in the default (Schrödinger) picture.
pub fn esd_time(params: &ModelParams, rho0: &DensityMatrix, t_max: f64, tol: f64) -> Result<EsdResult> {
    esd_time_in(params, rho0, t_max, tol, Picture::Schrodinger)
}

/// Coarse forward scan for the first sign change of Λ, then bisection to
/// width ≤ `tol`.
pub fn esd_time_in(params: &ModelParams, rho0: &DensityMatrix, t_max: f64, tol: f64, picture: Picture) -> Result<EsdResult> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let lambda0 = concurrence_lambda(rho0);
    if lambda0 <= 0.0 {
        return Err(Error::NotEntangled(format!("initial concurrence is 0 (Λ = {lambda0:e})")));
    }
    let generator = tabulated_generator(&damping_rates(params)?);
    let basis = hermitian_basis();
    let lambda = |t: f64| kraus_state(&generator, params, rho0, t, picture, &basis).map(|s| concurrence_lambda(&s));

    let (mut lo, mut l_lo) = (0.0, lambda0);
    let mut hit = None;
    for k in 1..=ESD_SCAN_SAMPLES {
        let t = t_max * k as f64 / ESD_SCAN_SAMPLES as f64;
        let l = lambda(t)?;
        if l <= 0.0 {
            hit = Some((t, l));
            break;
        }
        (lo, l_lo) = (t, l);
    }
    let Some((mut hi, mut l_hi)) = hit else {
        return Ok(EsdResult { esd_time: None, bracket: (lo, t_max), lambda_at_bracket: (l_lo, l_lo) });
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let l = lambda(mid)?;
        if l > 0.0 {
            (lo, l_lo) = (mid, l);
        } else {
            (hi, l_hi) = (mid, l);
        }
    }
    Ok(EsdResult { esd_time: Some(0.5 * (lo + hi)), bracket: (lo, hi), lambda_at_bracket: (l_lo, l_hi) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub beta: f64,
    pub t: f64,
    pub concurrence: f64,
}

/// Concurrence of the evolved Bell state on a β × t grid, row-major in β.
pub fn concurrence_surface(base: &ModelParams, betas: &[f64], times: &[f64], picture: Picture, exec: Exec) -> Result<Vec<SurfacePoint>> {
    if betas.is_empty() || times.is_empty() {
        return Err(Error::InvalidArgument("surface grids must be nonempty".into()));
    }
    for (name, grid) in [("β", betas), ("t", times)] {
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!("{name} grid must be increasing")));
        }
    }
    if times[0] < 0.0 {
        return Err(Error::InvalidArgument("times must be ≥ 0".into()));
    }
    let rows = map_indexed(betas.len(), Exec::Sequential, |i| {
        let params = base.with_beta(betas[i]);
        Ok((params, tabulated_generator(&damping_rates(&params)?)))
    })?;
    let rho0 = DensityMatrix::bell_plus();
    let nt = times.len();
    map_indexed(betas.len() * nt, exec, |idx| {
        let (i, j) = (idx / nt, idx % nt);
        let (params, generator) = &rows[i];
        let state = kraus_state(generator, params, &rho0, times[j], picture, &hermitian_basis())?;
        Ok(SurfacePoint { beta: betas[i], t: times[j], concurrence: concurrence(&state) })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Provenance;
    use crate::generator::Superoperator;
    use crate::kraus::map_matrix;
    use crate::linalg::max_abs_real;
    use crate::qops::QubitOperator;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    fn werner(p: f64) -> DensityMatrix {
        let m = DensityMatrix::bell_plus().matrix() * c(p, 0.0) + Operator::identity() * c((1.0 - p) / 4.0, 0.0);
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn zero_generator_gives_constant_trajectory() {
        let gen = GeneratorMatrix::new(Superoperator::zeros(), Provenance::Tabulated);
        let tr = integrate_master_equation(&gen, &DensityMatrix::bell_plus(), &grid(1.0, 5)).unwrap();
        assert!(tr.states.iter().all(|s| s.trace_distance(&DensityMatrix::bell_plus()) < 1e-15));
    }

    #[test]
    fn integrator_matches_exponential() {
        let params = ModelParams::default().with_beta(50.0);
        let gen = tabulated_generator(&damping_rates(&params).unwrap());
        let basis = hermitian_basis();
        let rho0 = DensityMatrix::bell_plus();
        let times = grid(6e-3, 7);
        let tr = integrate_master_equation(&gen, &rho0, &times).unwrap();
        let c0 = real_coefficients(&rho0, &basis);
        for (t, s) in times.iter().zip(&tr.states) {
            let exact = map_matrix(&gen, *t).unwrap().entries() * c0;
            assert!(max_abs_real(&(real_coefficients(s, &basis) - exact)) < 1e-9);
            assert!((s.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_time_grids() {
        let rho = DensityMatrix::bell_plus();
        let p = ModelParams::default();
        assert!(evolve_kraus(&p, &rho, &[], Picture::Interaction).is_err());
        assert!(evolve_kraus(&p, &rho, &[1e-3, 2e-3], Picture::Interaction).is_err());
        assert!(evolve_kraus(&p, &rho, &[0.0, 2e-3, 1e-3], Picture::Interaction).is_err());
    }

    #[test]
    fn kraus_trajectory_starts_at_input_and_matches_integrator() {
        let params = ModelParams::default();
        let rho0 = DensityMatrix::bell_plus();
        let times = grid(5e-3, 11);
        let kraus = evolve_kraus(&params, &rho0, &times, Picture::Interaction).unwrap();
        assert_eq!(kraus.states[0], rho0);
        let gen = tabulated_generator(&damping_rates(&params).unwrap());
        let ode = integrate_master_equation(&gen, &rho0, &times).unwrap();
        assert!(kraus.max_trace_distance(&ode) < 1e-6);
    }

    #[test]
    fn maximally_mixed_is_fixed() {
        let tr = evolve_kraus(&ModelParams::default().with_beta(100.0), &DensityMatrix::maximally_mixed(), &grid(0.05, 6), Picture::Schrodinger)
            .unwrap();
        for s in &tr.states {
            assert!(s.trace_distance(&DensityMatrix::maximally_mixed()) < 1e-12);
        }
    }

    #[test]
    fn concurrence_reference_states() {
        assert!((concurrence(&DensityMatrix::bell_plus()) - 1.0).abs() < 1e-12);
        let a = QubitOperator::new(c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0));
        let b = QubitOperator::new(c(0.4, 0.0), c(0.0, -0.3), c(0.0, 0.3), c(0.6, 0.0));
        assert!(concurrence(&DensityMatrix::product(&a, &b).unwrap()) < 1e-7);
        assert_eq!(concurrence(&DensityMatrix::maximally_mixed()), 0.0);
    }

    #[test]
    fn werner_state_against_direct_eigenvalues() {
        for p in [0.2, 0.5, 0.8] {
            let rho = werner(p);
            // oracle: eigenvalues of the non-Hermitian product ρρ̃ (real here)
            let prod = rho.matrix() * spin_flip(rho.matrix());
            assert!(prod.iter().all(|z| z.im == 0.0));
            let prod = prod.map(|z| z.re);
            let mut ev: Vec<f64> = prod.complex_eigenvalues().iter().map(|z| z.re.max(0.0).sqrt()).collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            let direct = (ev[0] - ev[1] - ev[2] - ev[3]).max(0.0);
            assert!((concurrence(&rho) - direct).abs() < 1e-7, "p = {p}");
            assert!((concurrence(&rho) - ((3.0 * p - 1.0) / 2.0).max(0.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn bell_concurrence_closed_form() {
        let params = ModelParams::default().with_beta(50.0);
        let r = damping_rates(&params).unwrap();
        let times = grid(4e-3, 9);
        for picture in [Picture::Interaction, Picture::Schrodinger] {
            let tr = evolve_kraus(&params, &DensityMatrix::bell_plus(), &times, picture).unwrap();
            for (t, got) in times.iter().zip(&tr.concurrence) {
                let lam = (-8.0 * t * r.sum()).exp()
                    - 0.5 * ((-(-32.0 * t * r.gamma1).exp_m1()) * (-(-32.0 * t * r.gamma2).exp_m1())).sqrt();
                assert!((got - lam.max(0.0)).abs() < 1e-9, "t = {t}");
            }
        }
    }

    #[test]
    fn esd_bracket_and_preconditions() {
        let params = ModelParams::default();
        let rates = damping_rates(&params).unwrap();
        let res = esd_time(&params, &DensityMatrix::bell_plus(), default_t_max(&rates), 1e-10).unwrap();
        let t = res.esd_time.unwrap();
        assert!(res.bracket.1 - res.bracket.0 <= 1e-10);
        assert!(res.lambda_at_bracket.0 > 0.0 && res.lambda_at_bracket.1 <= 0.0);
        assert!((t - 2.1950866e-3).abs() < 1e-9);
        assert!(matches!(
            esd_time(&params, &DensityMatrix::maximally_mixed(), 1.0, 1e-9),
            Err(Error::NotEntangled(_))
        ));
        assert!(esd_time(&params, &DensityMatrix::bell_plus(), 0.0, 1e-9).is_err());
        let none = esd_time(&params, &DensityMatrix::bell_plus(), 1e-4, 1e-9).unwrap();
        assert!(none.esd_time.is_none());
    }

    #[test]
    fn surface_is_deterministic_and_starts_at_one() {
        let betas = [0.0, 50.0, 100.0];
        let times = grid(6e-3, 13);
        let base = ModelParams::default();
        let seq = concurrence_surface(&base, &betas, &times, Picture::Schrodinger, Exec::Sequential).unwrap();
        let par = concurrence_surface(&base, &betas, &times, Picture::Schrodinger, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
        for row in seq.chunks(times.len()) {
            assert!((row[0].concurrence - 1.0).abs() < 1e-12);
            assert!(row.windows(2).all(|w| w[1].concurrence <= w[0].concurrence + 1e-9));
        }
    }
}
