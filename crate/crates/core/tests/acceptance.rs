//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{log_times, random_qubit_state, random_qubit_unitary, random_state, rng};
use qpair_kraus::dynamics::{concurrence, concurrence_lambda, default_t_max, esd_time, evolve_kraus, integrate_master_equation};
use qpair_kraus::generator::{tabulated_generator, Superoperator};
use qpair_kraus::kraus::{
    analytic_kraus_parts, apply_map, channel_at, choi_from_map, compare_analytic, map_matrix, reduce_single_qubit,
    sector_sums, verify_cptp_with, Picture,
};
use qpair_kraus::linalg::{c, max_abs, max_abs_real};
use qpair_kraus::model::{damping_rates, DampingRates, ModelParams, RateConvention};
use qpair_kraus::qops::{hermitian_basis, kron, partial_trace, pauli, DensityMatrix, Operator, Qubit};
use rand::Rng;

const BETAS: [f64; 3] = [0.0, 50.0, 100.0];

struct Outcome {
    pass: bool,
    detail: String,
    budget: Option<Duration>,
}

type Check = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, budget: None }
}

fn params(beta: f64) -> ModelParams {
    ModelParams::default().with_beta(beta)
}

fn rates(beta: f64) -> DampingRates {
    damping_rates(&params(beta)).unwrap()
}

fn grid() -> Vec<f64> {
    log_times(1e-5, 1e-1, 20)
}

/// Non-zero entries of the tabulated F, 1-based printed labels.
fn printed_f(r: &DampingRates, t: f64) -> Superoperator {
    let (g1, g2) = (r.gamma1, r.gamma2);
    let (e1, e2) = ((-16.0 * t * g1).exp(), (-16.0 * t * g2).exp());
    let (d1, d2) = ((-32.0 * t * g1).exp(), (-32.0 * t * g2).exp());
    let m = (-8.0 * t * (g1 + g2)).exp();
    let mut f = Superoperator::zeros();
    let mut set = |i: usize, j: usize, v: f64| f[(i - 1, j - 1)] = v;
    set(1, 1, 1.0);
    set(7, 7, 1.0);
    for k in [2, 3, 14, 15] {
        set(k, k, (e1 + e2) / 2.0);
    }
    for (i, j) in [(2, 14), (3, 15), (14, 2), (15, 3)] {
        set(i, j, (e1 - e2) / 2.0);
    }
    for k in [5, 6, 8, 9, 10, 11, 12, 13] {
        set(k, k, m);
    }
    set(4, 4, (d1 + d2) / 2.0);
    set(16, 16, (d1 + d2) / 2.0);
    set(4, 16, (d1 - d2) / 2.0);
    set(16, 4, (d1 - d2) / 2.0);
    f
}

fn map_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for beta in BETAS {
        let r = rates(beta);
        let generator = tabulated_generator(&r);
        for t in grid() {
            let map = map_matrix(&generator, t).unwrap();
            worst = worst.max(max_abs_real(&(map.to_printed_labels() - printed_f(&r, t))));
        }
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("max |e^(Lt) − F_printed| = {worst:.2e} (≤ 1e-10)"),
        budget: Some(Duration::from_secs(1)),
    }
}

fn cptp() -> Outcome {
    let basis = hermitian_basis();
    let (mut choi_min, mut complete, mut unital, mut herm) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for beta in BETAS {
        let generator = tabulated_generator(&rates(beta));
        for t in grid() {
            choi_min = choi_min.min(choi_from_map(&map_matrix(&generator, t).unwrap(), &basis).min_eigenvalue());
            let report = verify_cptp_with(&channel_at(&generator, t, &basis, 1e-9).unwrap(), 1e-9);
            complete = complete.max(report.completeness);
            unital = unital.max(report.unitality);
            herm = herm.max(report.max_hermiticity());
        }
    }
    outcome(
        choi_min >= -1e-9 && complete <= 1e-9 && unital <= 1e-9 && herm <= 1e-9,
        format!("Choi min {choi_min:.2e}, completeness {complete:.2e}, unitality {unital:.2e}, Hermiticity {herm:.2e}"),
    )
}

fn anchors() -> Outcome {
    let basis = hermitian_basis();
    let mut rng = rng(3);
    let mut identity_dev = 0.0f64;
    for beta in BETAS {
        let set = channel_at(&tabulated_generator(&rates(beta)), 0.0, &basis, 1e-9).unwrap();
        for _ in 0..20 {
            let rho = random_state(&mut rng);
            identity_dev = identity_dev.max(apply_map(&set, &rho).unwrap().trace_distance(&rho));
        }
    }
    let mut anchor_dev = 0.0f64;
    for beta in BETAS {
        let parts = analytic_kraus_parts(&rates(beta), 0.0).unwrap();
        let co = &parts.coefficients;
        let ops = parts.kraus_set().unwrap();
        anchor_dev = [
            (co.b - 8.0).abs(),
            co.a.unwrap().abs(),
            (co.a_prime.unwrap() - 1.0 / 16.0).abs(),
            max_abs(&(ops.operators[7].op + Operator::identity())),
            ops.operators[..7].iter().map(|k| max_abs(&k.op)).fold(0.0, f64::max),
        ]
        .into_iter()
        .fold(anchor_dev, f64::max);
    }
    outcome(
        identity_dev <= 1e-10 && anchor_dev <= 1e-14,
        format!("numeric identity channel {identity_dev:.2e} (≤ 1e-10); B, A, A′, K₁…K₈ anchors {anchor_dev:.2e}"),
    )
}

fn esd_of(beta: f64) -> f64 {
    let p = params(beta);
    esd_time(&p, &DensityMatrix::bell_plus(), default_t_max(&rates(beta)), 1e-10).unwrap().esd_time.unwrap()
}

fn rk4_oracle() -> Outcome {
    let rho0 = DensityMatrix::bell_plus();
    let mut worst = 0.0f64;
    for beta in BETAS {
        let p = params(beta);
        let t_end = 3.0 * esd_of(beta);
        let times: Vec<f64> = (0..50).map(|k| t_end * k as f64 / 49.0).collect();
        let kraus = evolve_kraus(&p, &rho0, &times, Picture::Interaction).unwrap();
        let ode = integrate_master_equation(&tabulated_generator(&rates(beta)), &rho0, &times).unwrap();
        worst = worst.max(kraus.max_trace_distance(&ode));
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max trace distance Kraus vs RK4 = {worst:.2e} (≤ 1e-6), 50 samples on [0, 3·t_ESD]"),
        budget: Some(Duration::from_secs(10)),
    }
}

fn semigroup() -> Outcome {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    for beta in BETAS {
        let generator = tabulated_generator(&rates(beta));
        for _ in 0..20 {
            let (t1, t2) = (rng.gen_range(0.0..0.05), rng.gen_range(0.0..0.05));
            let lhs = map_matrix(&generator, t1 + t2).unwrap();
            let rhs = map_matrix(&generator, t1).unwrap().entries() * map_matrix(&generator, t2).unwrap().entries();
            worst = worst.max(max_abs_real(&(lhs.entries() - rhs)));
        }
    }
    outcome(worst <= 1e-10, format!("max ‖F(t1+t2) − F(t1)F(t2)‖ = {worst:.2e} (≤ 1e-10)"))
}

fn asymptotic_sums() -> Outcome {
    let basis = hermitian_basis();
    let quarter = Operator::identity() * c(0.25, 0.0);
    let three_quarters = Operator::identity() * c(0.75, 0.0);
    let iz = kron(&pauli(0).unwrap(), &pauli(3).unwrap());
    let (mut pair_dev, mut projection_dev) = (0.0f64, 0.0f64);
    let mut swapped_everywhere = true;
    for beta in BETAS {
        let r = rates(beta);
        let generator = tabulated_generator(&r);
        let t_inf = 40.0 / (16.0 * r.min());
        let sums = sector_sums(&choi_from_map(&map_matrix(&generator, t_inf).unwrap(), &basis), &basis);
        let printed = max_abs(&(sums.flips - quarter)).max(max_abs(&(sums.diagonal - three_quarters)));
        let swapped = max_abs(&(sums.flips - three_quarters)).max(max_abs(&(sums.diagonal - quarter)));
        pair_dev = pair_dev.max(printed.min(swapped));
        swapped_everywhere &= swapped < printed;

        // independent route: split the numeric Kraus operators by projecting on span{I⊗I, I⊗σz}
        let set = channel_at(&generator, t_inf, &basis, 1e-9).unwrap();
        let (mut diag, mut flips) = (Operator::zeros(), Operator::zeros());
        for k in set.iter() {
            let a = k.trace() / c(4.0, 0.0);
            let b = (iz * k).trace() / c(4.0, 0.0);
            let in_span = Operator::identity() * a + iz * b;
            let total = k.norm_squared();
            let (inside, outside) = (in_span.norm_squared(), (k - in_span).norm_squared());
            if outside <= 1e-12 * total {
                diag += k * k;
            } else if inside <= 1e-12 * total {
                flips += k * k;
            } else {
                projection_dev = f64::INFINITY;
            }
        }
        projection_dev = projection_dev.max(max_abs(&(diag - sums.diagonal))).max(max_abs(&(flips - sums.flips)));
    }
    let assignment = if swapped_everywhere {
        "Σ₁⁶KᵢKᵢ → 3I/4, Σ₇⁸KᵢKᵢ → I/4: interchanged relative to the printed assignment"
    } else {
        "Σ₁⁶KᵢKᵢ → I/4, Σ₇⁸KᵢKᵢ → 3I/4: agrees with the printed assignment"
    };
    outcome(
        pair_dev <= 1e-8 && projection_dev <= 1e-8,
        format!("unordered pair deviation {pair_dev:.2e} (≤ 1e-8), projection cross-check {projection_dev:.2e}; {assignment}"),
    )
}

/// Closed-form Λ(t) for the Bell input.
fn bell_lambda(r: &DampingRates, t: f64) -> f64 {
    (-8.0 * t * r.sum()).exp() - 0.5 * ((-(-32.0 * t * r.gamma1).exp_m1()) * (-(-32.0 * t * r.gamma2).exp_m1())).sqrt()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sudden_death() -> Outcome {
    let rho0 = DensityMatrix::bell_plus();
    let mut times = Vec::new();
    let (mut width, mut oracle, mut c0) = (0.0f64, 0.0f64, 0.0f64);
    for beta in BETAS {
        let p = params(beta);
        let r = rates(beta);
        let res = esd_time(&p, &rho0, default_t_max(&r), 1e-10).unwrap();
        let Some(t) = res.esd_time else {
            return outcome(false, format!("no sudden death found at β = {beta}"));
        };
        width = width.max((res.bracket.1 - res.bracket.0) / t);
        oracle = oracle.max((t - bisect(|s| bell_lambda(&r, s), 0.0, default_t_max(&r))).abs() / t);
        let start = evolve_kraus(&p, &rho0, &[0.0], Picture::Schrodinger).unwrap();
        c0 = c0.max((start.concurrence[0] - 1.0).abs());
        times.push(t);
    }
    let increasing = times.windows(2).all(|w| w[1] > w[0]);
    let literal: Vec<String> = BETAS
        .iter()
        .map(|&b| {
            let p = ModelParams { convention: RateConvention::Literal, ..params(b) };
            let r = damping_rates(&p).unwrap();
            let t = esd_time(&p, &rho0, default_t_max(&r), 1e-10).unwrap().esd_time;
            t.map_or("none".into(), |t| format!("{t:.7e}"))
        })
        .collect();
    Outcome {
        pass: increasing && width <= 1e-6 && oracle <= 1e-6 && c0 <= 1e-12,
        detail: format!(
            "t_ESD(β=0,50,100) = {:.7e}, {:.7e}, {:.7e} (increasing: {increasing}); bracket {width:.1e} rel; vs closed-form Λ root {oracle:.1e} rel; |C(0) − 1| = {c0:.1e}; literal rate convention: {}",
            times[0],
            times[1],
            times[2],
            literal.join(", ")
        ),
        budget: Some(Duration::from_secs(5)),
    }
}

fn analytic_vs_numeric() -> Outcome {
    let (mut flip, mut corrected) = (0.0f64, 0.0f64);
    let (mut printed, mut failures, mut total) = (None::<f64>, 0usize, 0usize);
    let mut implied = 0.0f64;
    for beta in BETAS {
        let r = rates(beta);
        for t in grid() {
            let cmp = compare_analytic(&r, t).unwrap();
            total += 1;
            flip = flip.max(cmp.flip_weight_error).max(cmp.flip_choi_distance);
            match cmp.choi_distance {
                Some(d) => printed = Some(printed.unwrap_or(0.0).max(d)),
                None => failures += 1,
            }
            corrected = corrected.max(cmp.choi_distance_corrected.unwrap_or(f64::INFINITY));
            if beta > 0.0 && t <= 3e-3 {
                implied = implied.max(cmp.choi_distance_implied_b.unwrap_or(f64::INFINITY));
            }
        }
    }
    let printed_ok = failures == 0 && printed.is_some_and(|d| d <= 1e-8);
    let isolated = corrected <= 1e-10;
    outcome(
        flip <= 1e-8 && (printed_ok || isolated),
        format!(
            "K₁…K₆ vs numeric flip sector {flip:.2e} (≤ 1e-8); printed B: K₇/K₈ {} at {failures}/{total} grid points{}; B fitted to the numeric K₈ weight (β>0, t≤3e-3): {implied:.1e}; last term of B² as 8e^(56τ)cosh(24Wτ): Choi distance {corrected:.2e}",
            if failures > 0 { "not evaluable" } else { "evaluable" },
            printed.map_or(String::new(), |d| format!(", Choi distance where evaluable {d:.2e}")),
        ),
    )
}

fn reduction() -> Outcome {
    let basis = hermitian_basis();
    let mut rng = rng(9);
    let (mut worst, mut b_min) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let beta = BETAS[rng.gen_range(0..3)];
        let t = (rng.gen_range(1e-5f64.ln()..1e-1f64.ln())).exp();
        let traced = if rng.gen_bool(0.5) { Qubit::First } else { Qubit::Second };
        let set = channel_at(&tabulated_generator(&rates(beta)), t, &basis, 1e-9).unwrap();
        let (sys, env) = (random_qubit_state(&mut rng), random_qubit_state(&mut rng));
        let red = reduce_single_qubit(&set, &env, traced).unwrap();
        let input = match traced {
            Qubit::Second => kron(&sys, &env),
            Qubit::First => kron(&env, &sys),
        };
        let full = partial_trace(&set.apply_raw(&input), traced);
        worst = worst.max(max_abs(&(full - red.apply(&sys))));
        b_min = b_min.min(red.b_min_eigenvalue);
    }
    outcome(
        worst <= 1e-9 && b_min >= -1e-9,
        format!("max |Tr_env Φ(ρ⊗σ) − Σ MρM†| = {worst:.2e} (≤ 1e-9); b min eigenvalue {b_min:.2e}"),
    )
}

fn concurrence_checks() -> Outcome {
    let mut rng = rng(10);
    let bell = (concurrence(&DensityMatrix::bell_plus()) - 1.0).abs();
    let mut product = 0.0f64;
    let mut invariance = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..50 {
        let rho = DensityMatrix::product(&random_qubit_state(&mut rng), &random_qubit_state(&mut rng)).unwrap();
        product = product.max(concurrence(&rho));
    }
    for _ in 0..1000 {
        let rho = random_state(&mut rng);
        let value = concurrence(&rho);
        lo = lo.min(value);
        hi = hi.max(value);
        let u = kron(&random_qubit_unitary(&mut rng), &random_qubit_unitary(&mut rng));
        let rotated = DensityMatrix::new(u * rho.matrix() * u.adjoint()).unwrap();
        invariance = invariance.max((concurrence_lambda(&rotated) - concurrence_lambda(&rho)).abs());
    }
    // a pure entangled state well inside (0, 1) keeps the range check honest
    let psi = [c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0)];
    let pure = DensityMatrix::new(Operator::from_fn(|i, j| psi[i] * psi[j].conj())).unwrap();
    let partial = (concurrence(&pure) - 0.96).abs();
    outcome(
        bell <= 1e-12 && product <= 1e-9 && invariance <= 1e-9 && lo >= 0.0 && hi <= 1.0 && partial <= 1e-12,
        format!(
            "Bell |C − 1| {bell:.1e}; product max C {product:.1e}; local-unitary ΔΛ {invariance:.1e} (≤ 1e-9); 1000 random states C ∈ [{lo:.3}, {hi:.3}]; |ψ⟩ = 0.8|00⟩ + 0.6|11⟩ gives |C − 0.96| {partial:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("map closed forms", map_closed_forms),
        ("CPTP invariants", cptp),
        ("t = 0 anchors", anchors),
        ("RK4 oracle", rk4_oracle),
        ("semigroup", semigroup),
        ("asymptotic sums", asymptotic_sums),
        ("sudden death", sudden_death),
        ("analytic vs numeric", analytic_vs_numeric),
        ("reduction", reduction),
        ("concurrence", concurrence_checks),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = out.budget.is_none_or(|b| elapsed <= b);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = out.budget.map_or(String::new(), |b| format!(" / budget {b:.0?}"));
        println!(
            "{} {:>2} {name}: {} [{elapsed:.2?}{budget}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
