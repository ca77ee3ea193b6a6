use feller_core::criteria::{bump_constant, BumpSpec};
use feller_core::empirics::empirical_char_fn;
use feller_core::expr::Expr;
use feller_core::quadrature::{classify_improper, Classification, QuadOptions, Region};
use feller_core::simulate::{simulate_levy, simulate_stable_like, uniform_grid, SimulationOptions};
use feller_core::symbol::{StableLikeSpec, StateFn, SymbolModel};

// scipy QAWO transform of the bump, Simpson in ξ up to 300 plus the
// e^{-√(2ξ)} tail estimate; the truncation and noise are below 1e-4 relative.
const STANDARD_BUMP_CONSTANT_D1: f64 = 32.4221;

#[test]
fn standard_bump_constant_in_one_dimension() {
    let c = bump_constant(1, &BumpSpec::Standard).unwrap();
    assert!((c / STANDARD_BUMP_CONSTANT_D1 - 1.0).abs() < 1e-4, "{c}");
}

#[test]
fn power_singularities_at_the_origin() {
    let loose = QuadOptions::default();
    let tight = QuadOptions::with_tolerance(loose.rel_tol / 10.0, loose.abs_tol / 10.0);
    for d in 1..=3 {
        for k in 1..=11 {
            let beta = 0.25 * k as f64;
            if (beta - d as f64).abs() < 0.3 {
                continue;
            }
            let f = move |r: f64| r.powf(-beta);
            let a = classify_improper(f, d, Region::Ball(1.0), &loose);
            let b = classify_improper(f, d, Region::Ball(1.0), &tight);
            let want = if beta < d as f64 { Classification::Convergent } else { Classification::DivergentAtZero };
            assert_eq!(a.classification, want, "d={d} β={beta}");
            assert_eq!(b.classification, a.classification, "d={d} β={beta}");
            if beta < d as f64 {
                // ω_{d−1}/(d − β)
                let omega = [2.0, 2.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI][d - 1];
                let exact = omega / (d as f64 - beta);
                assert!((a.value / exact - 1.0).abs() < 1e-6, "d={d} β={beta}: {} vs {exact}", a.value);
            }
        }
    }
}

#[test]
fn stable_like_matches_its_jump_characteristics() {
    let alpha = StateFn::from_expr(Expr::parse("1.5 + 0.3*sin(x)").unwrap());
    let spec: StableLikeSpec<f64> = StableLikeSpec::new(1, alpha, 1.2, 1.8, true).unwrap();
    let lk = spec.levy_characteristics();
    for x in [-2.0, 0.0, 0.7, 1.5707963267948966] {
        for xi in [0.1, 1.0, -3.0, 20.0] {
            let closed = spec.eval(&[x], &[xi]);
            let quad = lk.eval(&[x], &[xi]).unwrap();
            assert!((quad.re / closed - 1.0).abs() < 1e-5, "x={x} ξ={xi}: {} vs {closed}", quad.re);
            assert!(quad.im.abs() < 1e-5 * closed, "x={x} ξ={xi}: {}", quad.im);
        }
    }
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let model = SymbolModel::alpha_stable(1, 1.5, 1.0);
    let grid = uniform_grid(0.5, 2);
    let se = |n: usize| {
        let e = simulate_levy(&model, &[0.0], &grid, &SimulationOptions::new(n, 99)).unwrap();
        empirical_char_fn(&e, 1.0, &[1.0]).unwrap().std_error()
    };
    let s = [se(1_000), se(10_000), se(100_000)];
    for w in s.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.2, "{s:?}");
    }
}

#[test]
fn frozen_scheme_is_exact_for_constant_index() {
    let alpha = 1.3;
    let grid = uniform_grid(1e-3, 200);
    let opts = SimulationOptions::new(20_000, 5).with_decimation(20);
    let euler = simulate_stable_like(&StableLikeSpec::constant(1, alpha).unwrap(), &[0.0], &grid, &opts).unwrap();
    let exact = simulate_levy(&SymbolModel::alpha_stable(1, alpha, 1.0), &[0.0], &grid, &opts.with_stream_offset(20_000))
        .unwrap();
    for &t in &euler.time_grid[1..] {
        for xi in [0.5, 2.0, 8.0] {
            let a = empirical_char_fn(&euler, t, &[xi]).unwrap();
            let b = empirical_char_fn(&exact, t, &[xi]).unwrap();
            let truth = (-t * f64::powf(xi, alpha)).exp();
            let gap = (a.value() - b.value()).norm();
            assert!(gap <= 3.0 * a.std_error().hypot(b.std_error()), "t={t} ξ={xi}: {gap}");
            assert!((a.re - truth).abs() <= 3.0 * a.std_error_re.max(1e-4), "t={t} ξ={xi}: {} vs {truth}", a.re);
        }
    }
}

#[test]
fn halving_the_step_stays_within_noise() {
    let alpha = StateFn::from_expr(Expr::parse("1.5 + 0.3*sin(x)").unwrap());
    let spec = StableLikeSpec::new(1, alpha, 1.2, 1.8, true).unwrap();
    let n = 20_000;
    let coarse = simulate_stable_like(&spec, &[0.0], &uniform_grid(1e-3, 500), &SimulationOptions::new(n, 8).with_decimation(50))
        .unwrap();
    let fine = simulate_stable_like(
        &spec,
        &[0.0],
        &uniform_grid(5e-4, 1000),
        &SimulationOptions::new(n, 8).with_decimation(100).with_stream_offset(n as u64),
    )
    .unwrap();
    for t in [0.1, 0.3, 0.5] {
        for xi in [0.5, 1.0, 3.0] {
            let a = empirical_char_fn(&coarse, t, &[xi]).unwrap();
            let b = empirical_char_fn(&fine, t, &[xi]).unwrap();
            let gap = (a.value() - b.value()).norm();
            assert!(gap <= 4.0 * a.std_error().hypot(b.std_error()), "t={t} ξ={xi}: {gap}");
        }
    }
}
