//! Acceptance suite: twelve criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p feller-cli --test acceptance`.

use std::time::{Duration, Instant};

use feller_cli::{run_simulate, ExperimentConfig};
use feller_core::criteria::{
    build_envelope, build_envelope_with, bump_constant, char_fn_bound, exit_time_bound, heat_exponent_fit,
    heat_kernel_sup_bound, test_local_times, test_transience, BumpSpec, Envelope, EnvelopeMethod, StateDomain,
};
use feller_core::empirics::{
    exit_frequency, generator_finite_difference, occupation_fourier_check, symmetrization_law_check, validate_char_bound,
    SIGMA_MULTIPLE,
};
use feller_core::expr::Expr;
use feller_core::grid::lin_space;
use feller_core::quadrature::QuadOptions;
use feller_core::simulate::{
    simulate_levy, simulate_stable_like, symmetrize_paths, uniform_grid, PathEnsemble, SimulationOptions,
};
use feller_core::symbol::{symmetrize, StableLikeSpec, StateFn, SymbolModel};
use feller_core::Verdict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const C1_RUNTIME: Duration = Duration::from_secs(1);
const C2_REL_TOL: f64 = 0.005;
const C3_RUNTIME: Duration = Duration::from_secs(10);
const C5_REL_TOL: f64 = 0.05;
const C5_RUNTIME: Duration = Duration::from_secs(30);
const C6_MIN_FRACTION: f64 = 0.99;
const C6_RUNTIME: Duration = Duration::from_secs(300);
const C7_REL_TOL: f64 = 0.05;
const C8_POINTS: usize = 12;
/// "Exactly" up to a few units in the last place.
const C8_ULPS: f64 = 4.0 * f64::EPSILON;
const C9_HORIZON: f64 = 14.0;
const C12_TOL: f64 = 1e-6;

const SEED: u64 = 0x5EED_F311;

type Outcome = Result<String, String>;

fn exact_envelope(m: &SymbolModel<f64>) -> Envelope<f64> {
    build_envelope(m, &StateDomain::new(vec![], vec![], None), 3).unwrap()
}

fn stable_like(lower: f64, upper: f64, alpha: &str) -> SymbolModel<f64> {
    let a = StateFn::from_expr(Expr::parse(alpha).unwrap());
    SymbolModel::stable_like("stable_like", StableLikeSpec::new(1, a, lower, upper, true).unwrap())
}

/// α(x) = 1.5 + 0.3 sin x.
fn suite_model() -> SymbolModel<f64> {
    stable_like(1.2, 1.8, "1.5 + 0.3*sin(x)")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn levy_exactness() -> Outcome {
    let started = Instant::now();
    let ts = lin_space(0.05, 5.0, 20);
    let xis = lin_space(-10.0, 10.0, 20);
    let mut violations = 0;
    for (model, psi) in [
        (SymbolModel::brownian(1, 1.0), (|x: f64| x * x) as fn(f64) -> f64),
        (SymbolModel::alpha_stable(1, 1.0, 1.0), |x: f64| x.abs()),
    ] {
        let env = exact_envelope(&model);
        for &t in &ts {
            for &xi in &xis {
                if (-t * psi(xi)).exp() > char_fn_bound(&env, t, &[xi]).unwrap() {
                    violations += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    check(violations == 0 && elapsed < C1_RUNTIME, format!("{violations} violations in 800 points, {elapsed:.2?}"))
}

fn heat_kernel_closed_forms() -> Outcome {
    let opts = QuadOptions::default();
    let bm = exact_envelope(&SymbolModel::brownian(1, 1.0));
    let cauchy = exact_envelope(&SymbolModel::alpha_stable(1, 1.0, 1.0));
    let b1 = heat_kernel_sup_bound(&bm, 1.0, &opts).unwrap().value;
    let c1 = heat_kernel_sup_bound(&cauchy, 1.0, &opts).unwrap().value;
    let eb = (b1 * std::f64::consts::PI.sqrt() - 1.0).abs();
    let ec = (c1 * std::f64::consts::PI / 8.0 - 1.0).abs();
    let mut dominated = true;
    for t in [0.1, 1.0, 10.0] {
        let pi = std::f64::consts::PI;
        dominated &= heat_kernel_sup_bound(&bm, t, &opts).unwrap().value >= (4.0 * pi * t).powf(-0.5);
        dominated &= heat_kernel_sup_bound(&cauchy, t, &opts).unwrap().value >= 1.0 / (pi * t);
    }
    check(
        eb <= C2_REL_TOL && ec <= C2_REL_TOL && dominated,
        format!("brownian rel err {eb:.1e}, cauchy rel err {ec:.1e}, dominates exact sup: {dominated}"),
    )
}

fn transience_oracle() -> Outcome {
    let started = Instant::now();
    let opts = QuadOptions::default();
    let mut wrong = Vec::new();
    for d in 1..=3 {
        for alpha in [0.5, 1.0, 1.5] {
            let env = exact_envelope(&SymbolModel::alpha_stable(d, alpha, 1.0));
            let v = test_transience(&env, 1.0, true, &opts).unwrap().verdict;
            let expected = if alpha < d as f64 { Verdict::Holds } else { Verdict::Inconclusive };
            if v != expected {
                wrong.push(format!("(d={d}, α={alpha}: {v})"));
            }
        }
    }
    let elapsed = started.elapsed();
    check(wrong.is_empty() && elapsed < C3_RUNTIME, format!("mismatches {wrong:?}, {elapsed:.2?}"))
}

fn local_time_oracle() -> Outcome {
    let opts = QuadOptions::default();
    let mut wrong = Vec::new();
    for alpha in [0.5, 1.0, 1.5] {
        let env = exact_envelope(&SymbolModel::alpha_stable(1, alpha, 1.0));
        let v = test_local_times(&env, &opts).unwrap().verdict;
        let expected = if alpha > 1.0 { Verdict::Holds } else { Verdict::Inconclusive };
        if v != expected {
            wrong.push(format!("(α={alpha}: {v})"));
        }
    }
    let m = stable_like(1.5, 1.7, "1.6 + 0.1*sin(x)");
    let env = build_envelope(&m, &StateDomain::periodic(1), 33).unwrap();
    let sl = test_local_times(&env, &opts).unwrap().verdict;
    check(wrong.is_empty() && sl == Verdict::Holds, format!("mismatches {wrong:?}, stable-like with lower index 1.5: {sl}"))
}

fn heat_exponents() -> Outcome {
    let started = Instant::now();
    let env = build_envelope(&suite_model(), &StateDomain::periodic(1), 33).unwrap();
    let fit = heat_exponent_fit(&env, &feller_core::criteria::fit::default_heat_grid(), &QuadOptions::default()).unwrap();
    let (small, large) = (-1.0 / 1.2, -1.0 / 1.8);
    let es = (fit.small_t_slope / small - 1.0).abs();
    let el = (fit.large_t_slope / large - 1.0).abs();
    let elapsed = started.elapsed();
    check(
        es <= C5_REL_TOL && el <= C5_REL_TOL && elapsed < C5_RUNTIME,
        format!(
            "small-t slope {:.4} (target {small:.4}), large-t slope {:.4} (target {large:.4}), {elapsed:.2?}",
            fit.small_t_slope, fit.large_t_slope
        ),
    )
}

/// Stable-like suite: 10⁴ paths of step 1e-3 up to t = 1, plus an independent mirror.
struct Suite {
    base: PathEnsemble,
    mirror: PathEnsemble,
    simulated_in: Duration,
}

fn suite_paths() -> Suite {
    let started = Instant::now();
    let spec = suite_model().stable_like_spec().unwrap().clone();
    let opts = SimulationOptions::new(10_000, SEED);
    let grid = uniform_grid(1e-3, 1000);
    let base = simulate_stable_like(&spec, &[0.0], &grid, &opts).unwrap();
    let simulated_in = started.elapsed();
    let mirror = simulate_stable_like(&spec, &[0.0], &grid, &opts.mirror()).unwrap();
    Suite { base, mirror, simulated_in }
}

fn monte_carlo_bound(suite: &Suite) -> Outcome {
    let started = Instant::now();
    let env = build_envelope(&suite_model(), &StateDomain::periodic(1), 33).unwrap();
    let xi: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0].iter().map(|&x| vec![x]).collect();
    let r = validate_char_bound(&suite.base, &env, &[0.25, 0.5, 1.0], &xi).unwrap();
    let elapsed = started.elapsed() + suite.simulated_in;
    check(
        r.passes(C6_MIN_FRACTION) && elapsed < C6_RUNTIME,
        format!("{:.1}% of {} points within 3σ, {elapsed:.2?}", 100.0 * r.fraction_within, r.rows.len()),
    )
}

fn generator_consistency() -> Outcome {
    let spec = suite_model().stable_like_spec().unwrap().clone();
    let opts = SimulationOptions::new(400_000, SEED ^ 0x7).with_stream_offset(1 << 32);
    let ens = simulate_stable_like(&spec, &[0.0], &uniform_grid(1e-3, 100), &opts).unwrap();
    let h = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];
    let mut ok = true;
    let mut parts = Vec::new();
    for xi in [1.0f64, 2.0] {
        let fit = generator_finite_difference(&ens, &[0.0], &[xi], &h).unwrap();
        let target = xi.powf(1.5);
        let err = (fit.intercept_re / target - 1.0).abs();
        ok &= err <= C7_REL_TOL && !fit.inconclusive;
        parts.push(format!("ξ={xi}: {:.4} vs {target:.4} (±{:.4})", fit.intercept_re, fit.intercept_std_error));
    }
    check(ok, parts.join("; "))
}

fn symmetrization_law(suite: Suite) -> Outcome {
    let sym = symmetrize_paths(suite.base, suite.mirror).unwrap();
    let xi: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 4.0].iter().map(|&x| vec![x]).collect();
    let r = symmetrization_law_check(&sym, &[0.25, 0.5, 1.0], &xi).unwrap();
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let m = symmetrize(SymbolModel::alpha_stable(1, alpha, 1.0));
        for xi in [0.3, 1.0, 2.5, 7.0] {
            let got = m.eval(&[0.0], &[xi]).unwrap();
            let want = 2f64.powf(1.0 - alpha) * xi.powf(alpha);
            worst = worst.max((got.re - want).abs() / want).max(got.im.abs());
        }
    }
    check(
        r.rows.len() == C8_POINTS && r.n_within == C8_POINTS && r.independent && worst <= C8_ULPS,
        format!("{}/{} points within 3σ, evaluator max rel err {worst:.1e}", r.n_within, r.rows.len()),
    )
}

fn occupation_fourier() -> Outcome {
    let xi: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 4.0].iter().map(|&x| vec![x]).collect();
    let steps = (C9_HORIZON / 0.01).round() as usize;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, model) in [("brownian", SymbolModel::brownian(1, 1.0)), ("cauchy", SymbolModel::alpha_stable(1, 1.0, 1.0))] {
        let ens = simulate_levy(&model, &[0.0], &uniform_grid(0.01, steps), &SimulationOptions::new(2_000, SEED + 9)).unwrap();
        let r = occupation_fourier_check(&ens, &exact_envelope(&model), &xi).unwrap();
        ok &= r.all_pass();
        let worst = r.rows.iter().map(|row| (row.estimate - row.bound) / row.std_error.max(f64::MIN_POSITIVE)).fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!("{name}: {}/{} pass (worst excess {worst:.2}σ)", r.rows.iter().filter(|x| x.passes).count(), r.rows.len()));
    }
    check(ok, parts.join("; "))
}

fn exit_time(suite_base: &PathEnsemble) -> Outcome {
    let c_u = bump_constant(1, &BumpSpec::Standard).unwrap();
    let again = bump_constant(1, &BumpSpec::Standard).unwrap();
    let bm = SymbolModel::brownian(1, 1.0);
    let bm_paths = simulate_levy(&bm, &[0.0], &uniform_grid(1e-3, 100), &SimulationOptions::new(10_000, SEED + 10)).unwrap();
    let sl = suite_model();
    let mut ok = c_u > 0.0 && c_u == again;
    let mut worst = f64::INFINITY;
    for (model, ens) in [(&bm, &bm_paths), (&sl, suite_base)] {
        for (r, t) in [(0.5, 0.01), (1.0, 0.01), (1.0, 0.1)] {
            let est = exit_frequency(ens, &[0.0], r, t).unwrap();
            let bound = exit_time_bound(model, &[0.0], r, t, &BumpSpec::Standard).unwrap();
            let margin = bound.clipped + SIGMA_MULTIPLE * est.std_error - est.probability;
            ok &= margin >= 0.0;
            worst = worst.min(margin);
        }
    }
    check(ok, format!("c_u = {c_u:.4}, smallest margin {worst:.4}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let text = format!(
            "output_dir = {:?}\n[symbol]\nkind = \"stable_like\"\ndimension = 1\nalpha_expr = \"1.5 + 0.3*sin(x)\"\n\
             alpha_lower = 1.2\nalpha_upper = 1.8\n[simulation]\nseed = 42\nn_paths = 2000\nh = 0.001\nsteps = 200\n",
            dir.path().join(sub)
        );
        run_simulate(&ExperimentConfig::parse(&text).unwrap()).unwrap().sha256
    };
    let (a, b) = (run("a"), run("b"));
    check(a == b, format!("checksums {}… and {}…", &a[..12], &b[..12]))
}

fn envelope_oracle() -> Outcome {
    let m = suite_model();
    let grid = build_envelope_with(&m, &StateDomain::periodic(1), 64, EnvelopeMethod::Grid).unwrap();
    let closed = build_envelope(&m, &StateDomain::periodic(1), 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r = 10f64.powf(rng.random_range(-2.0..2.0));
        let xi = if rng.random_bool(0.5) { r } else { -r };
        let (g, c) = (grid.at(&[xi]).unwrap(), closed.at(&[xi]).unwrap());
        worst = worst.max((g.q_inf / c.q_inf - 1.0).abs()).max((g.q_sup / c.q_sup - 1.0).abs());
    }
    check(worst <= C12_TOL, format!("max relative deviation {worst:.2e} at 100 random ξ"))
}

fn main() {
    let mut outcomes: Vec<(usize, &str, Outcome)> = vec![
        (1, "Lévy exactness", levy_exactness()),
        (2, "heat-kernel closed forms", heat_kernel_closed_forms()),
        (3, "transience oracle", transience_oracle()),
        (4, "local-time oracle", local_time_oracle()),
        (5, "stable-like heat exponents", heat_exponents()),
    ];
    let suite = suite_paths();
    outcomes.push((6, "Monte-Carlo bound validation", monte_carlo_bound(&suite)));
    outcomes.push((7, "generator consistency", generator_consistency()));
    outcomes.push((10, "exit-time bound", exit_time(&suite.base)));
    outcomes.push((8, "symmetrization law", symmetrization_law(suite)));
    outcomes.push((9, "occupation-Fourier bound", occupation_fourier()));
    outcomes.push((11, "determinism", determinism()));
    outcomes.push((12, "envelope oracle", envelope_oracle()));
    outcomes.sort_by_key(|o| o.0);

    let mut failed = 0;
    for (n, name, outcome) in outcomes {
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name}: {d}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
