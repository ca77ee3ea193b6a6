//! Radial integration over R^d with dyadic-shell divergence classification.
//!
//! Integrals over balls, annuli and the whole space are split into dyadic
//! shells. Shells towards the origin are `R·2^{-k-1} ≤ |ξ| ≤ R·2^{-k}` and
//! shells towards infinity are `R·2^k ≤ |ξ| ≤ R·2^{k+1}`. For the regularly
//! varying integrands handled here the shell contributions are eventually
//! geometric, so the ratio of consecutive shells decides summability and the
//! remaining tail is extrapolated from the same ratio.

pub mod gauss_kronrod;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::special::sphere_area;
use gauss_kronrod::{integrate, GkOptions};

pub use gauss_kronrod::GkResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Convergent,
    DivergentAtZero,
    DivergentAtInfinity,
    Undetermined,
}

/// Partial integral over one dyadic shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellEntry<T> {
    /// `-k-1` for the k-th shell towards the origin, `k` for the k-th shell towards infinity.
    pub index: i32,
    pub inner: T,
    pub outer: T,
    pub partial: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult<T> {
    /// Sum of the evaluated shells plus the extrapolated tail. When `infinite`
    /// is set this holds the partial sum at the point divergence was declared.
    pub value: T,
    pub infinite: bool,
    pub abs_error_estimate: T,
    pub classification: Classification,
    pub annulus_trace: Vec<ShellEntry<T>>,
    pub note: Option<String>,
}

impl<T: Scalar> IntegralResult<T> {
    pub fn finite_value(&self) -> Option<T> {
        (!self.infinite && self.classification == Classification::Convergent).then_some(self.value)
    }

    pub fn is_convergent(&self) -> bool {
        self.classification == Classification::Convergent
    }

    pub fn to_f64(&self) -> IntegralResult<f64> {
        IntegralResult {
            value: self.value.to_f64_lossy(),
            infinite: self.infinite,
            abs_error_estimate: self.abs_error_estimate.to_f64_lossy(),
            classification: self.classification,
            annulus_trace: self
                .annulus_trace
                .iter()
                .map(|s| ShellEntry {
                    index: s.index,
                    inner: s.inner.to_f64_lossy(),
                    outer: s.outer.to_f64_lossy(),
                    partial: s.partial.to_f64_lossy(),
                })
                .collect(),
            note: self.note.clone(),
        }
    }

    fn scaled(mut self, factor: T) -> Self {
        self.value = self.value * factor;
        self.abs_error_estimate = self.abs_error_estimate * factor.abs();
        for s in &mut self.annulus_trace {
            s.partial = s.partial * factor;
        }
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Shells evaluated before a divergence verdict may be issued.
    pub min_shells: usize,
    /// Hard cap on shells per direction (towards 0 or towards ∞).
    pub max_shells: usize,
    /// Number of trailing shells inspected by the ratio test.
    pub window: usize,
    /// Shells count as nondecreasing when `S_{k+1} ≥ (1 − slack)·S_k`.
    pub divergence_slack: T,
    pub max_intervals: usize,
}

impl<T: Scalar> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-8),
            abs_tol: T::lit(1e-12),
            min_shells: 40,
            max_shells: 120,
            window: 8,
            divergence_slack: T::lit(0.01),
            max_intervals: 2000,
        }
    }
}

impl<T: Scalar> QuadOptions<T> {
    pub fn with_tolerance(rel_tol: T, abs_tol: T) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    fn gk(&self) -> GkOptions<T> {
        // Each shell gets a share of the budget well below the global target.
        let rel_floor = T::epsilon() * T::lit(200.0);
        GkOptions {
            abs_tol: self.abs_tol * T::lit(1e-2),
            rel_tol: (self.rel_tol * T::lit(1e-2)).max(rel_floor),
            max_intervals: self.max_intervals,
        }
    }

    fn target(&self, value: T) -> T {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integration region in R^d, described by radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<T> {
    /// `|ξ| ≤ r`
    Ball(T),
    /// `a ≤ |ξ| ≤ b` with `0 < a < b < ∞`
    Annulus(T, T),
    /// `|ξ| ≥ r`
    Exterior(T),
    Whole,
}

impl<T: Scalar> Region<T> {
    /// Region for radii `[a, b]`, `b` possibly infinite.
    pub fn from_radii(a: T, b: T) -> Self {
        match (a == T::zero(), b.is_infinite()) {
            (true, true) => Self::Whole,
            (true, false) => Self::Ball(b),
            (false, true) => Self::Exterior(a),
            (false, false) => Self::Annulus(a, b),
        }
    }
}

/// `∫_{a≤|ξ|≤b} f(|ξ|) dξ = ω_{d−1}∫_a^b f(r) r^{d−1} dr`; `b` may be `+∞`.
pub fn integrate_radial<T, F>(f: F, a: T, b: T, d: usize, opts: &QuadOptions<T>) -> IntegralResult<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    assert!(a >= T::zero() && b > a, "integrate_radial requires 0 <= a < b");
    classify_improper(f, d, Region::from_radii(a, b), opts)
}

/// Integrates the nonnegative radial profile `f` over `region` and classifies
/// the integral as convergent or divergent at 0 / ∞.
pub fn classify_improper<T, F>(f: F, d: usize, region: Region<T>, opts: &QuadOptions<T>) -> IntegralResult<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    assert!(d >= 1, "dimension must be positive");
    let dm1 = (d - 1) as i32;
    let weighted = |r: T| {
        let v = f(r);
        if v == T::zero() {
            T::zero()
        } else {
            v * r.powi(dm1)
        }
    };
    let omega: T = sphere_area(d);
    let result = match region {
        Region::Ball(r) => shells(&weighted, r, Direction::Inward, opts),
        Region::Exterior(r) => shells(&weighted, r, Direction::Outward, opts),
        Region::Whole => {
            let inner = shells(&weighted, T::one(), Direction::Inward, opts);
            let outer = shells(&weighted, T::one(), Direction::Outward, opts);
            merge(inner, outer, opts)
        }
        Region::Annulus(a, b) => annulus(&weighted, a, b, opts),
    };
    result.scaled(omega)
}

/// `∫_0^r f(u) du` by inward dyadic shells (no sphere factor).
pub fn half_line_toward_zero<T: Scalar, F: Fn(T) -> T>(f: F, r: T, opts: &QuadOptions<T>) -> IntegralResult<T> {
    shells(&f, r, Direction::Inward, opts)
}

/// `∫_r^∞ f(u) du` by outward dyadic shells (no sphere factor).
pub fn half_line_toward_infinity<T: Scalar, F: Fn(T) -> T>(f: F, r: T, opts: &QuadOptions<T>) -> IntegralResult<T> {
    shells(&f, r, Direction::Outward, opts)
}

/// Outcome of [`oscillatory_tail`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSum<T> {
    pub value: T,
    pub abs_error: T,
    pub converged: bool,
    pub pieces: usize,
}

/// `∫_start^∞ f(u) du` for an integrand whose sign alternates between the
/// consecutive nodes `node(0) < node(1) < …` (with `node(0) > start`).
///
/// The pieces between nodes are summed and the partial sums accelerated by
/// repeated averaging of the trailing partial sums.
pub fn oscillatory_tail<T, F, N>(f: &F, start: T, node: N, opts: &QuadOptions<T>) -> TailSum<T>
where
    T: Scalar,
    F: Fn(T) -> T,
    N: Fn(usize) -> T,
{
    const BATCH: usize = 8;
    const LEVELS: usize = 24;
    const MAX_PIECES: usize = 1024;
    let gk = opts.gk();
    let head = integrate(f, start, node(0), &gk);
    let mut quad_err = head.abs_error;
    let mut ok = head.converged;
    let mut partial = vec![head.value];
    let accelerate = |s: &[T]| -> T {
        let k = s.len().min(LEVELS);
        let mut row: Vec<T> = s[s.len() - k..].to_vec();
        while row.len() > 1 {
            row = row.windows(2).map(|w| T::lit(0.5) * (w[0] + w[1])).collect();
        }
        row[0]
    };
    let mut previous: Option<T> = None;
    let mut j = 0;
    while j < MAX_PIECES {
        for _ in 0..BATCH {
            let piece = integrate(f, node(j), node(j + 1), &gk);
            quad_err += piece.abs_error;
            ok &= piece.converged;
            let last = *partial.last().unwrap();
            partial.push(last + piece.value);
            j += 1;
        }
        let current = accelerate(&partial);
        if let Some(prev) = previous {
            let err = (current - prev).abs() + quad_err;
            if err <= opts.target(current) {
                return TailSum { value: current, abs_error: err, converged: ok, pieces: j };
            }
        }
        previous = Some(current);
    }
    let value = accelerate(&partial);
    let err = previous.map(|p| (value - p).abs()).unwrap_or(T::infinity()) + quad_err;
    TailSum { value, abs_error: err, converged: false, pieces: j }
}

/// Radial profile of a point integrand: the mean of `f` over a direction set, at radius `r`.
pub fn spherical_mean<'a, T, F>(f: F, directions: &'a [Vec<T>]) -> impl Fn(T) -> T + 'a
where
    T: Scalar,
    F: Fn(&[T]) -> T + 'a,
{
    let n = T::from_usize_lossy(directions.len());
    move |r: T| {
        let mut point = vec![T::zero(); directions[0].len()];
        let mut acc = T::zero();
        for dir in directions {
            for (p, &u) in point.iter_mut().zip(dir) {
                *p = r * u;
            }
            acc += f(&point);
        }
        acc / n
    }
}

/// Deterministic direction set on the unit sphere of R^d: `{±1}` for d=1,
/// `count` equispaced angles for d=2, a Fibonacci lattice of `count` points for d≥3
/// (higher coordinates filled from a golden-ratio sequence and renormalised).
pub fn direction_set<T: Scalar>(d: usize, count: usize) -> Vec<Vec<T>> {
    match d {
        0 => Vec::new(),
        1 => vec![vec![T::one()], vec![-T::one()]],
        2 => (0..count)
            .map(|k| {
                let th = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(count);
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let golden = T::lit(0.5) * (T::one() + T::lit(5.0).sqrt());
            let n = T::from_usize_lossy(count);
            (0..count)
                .map(|k| {
                    let kf = T::from_usize_lossy(k) + T::lit(0.5);
                    let z = T::one() - T::lit(2.0) * kf / n;
                    let rho = (T::one() - z * z).max(T::zero()).sqrt();
                    let phi = T::lit(2.0) * T::PI() * (kf / golden).fract();
                    let mut v = vec![rho * phi.cos(), rho * phi.sin(), z];
                    // Additional coordinates for d > 3: a Kronecker sequence, then normalise.
                    for j in 3..d {
                        let alpha = (T::from_usize_lossy(j) * golden).fract();
                        v.push(T::lit(2.0) * (kf * alpha).fract() - T::one());
                    }
                    let nrm = crate::scalar::norm(&v);
                    v.iter().map(|&c| c / nrm).collect()
                })
                .collect()
        }
    }
}

/// Direction count used by the quadrature module for non-radial integrands.
pub const QUADRATURE_DIRECTIONS: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Inward,
    Outward,
}

fn annulus<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, opts: &QuadOptions<T>) -> IntegralResult<T> {
    let gk = opts.gk();
    let mut trace = Vec::new();
    let mut value = T::zero();
    let mut err = T::zero();
    let mut lo = a;
    let mut index = 0;
    let mut ok = true;
    while lo < b {
        let hi = (lo * T::lit(2.0)).min(b);
        let r = integrate(f, lo, hi, &gk);
        ok &= r.converged;
        value += r.value;
        err += r.abs_error;
        trace.push(ShellEntry { index, inner: lo, outer: hi, partial: r.value });
        lo = hi;
        index += 1;
    }
    let classification =
        if ok && err <= opts.target(value) { Classification::Convergent } else { Classification::Undetermined };
    IntegralResult { value, infinite: false, abs_error_estimate: err, classification, annulus_trace: trace, note: None }
}

fn merge<T: Scalar>(inner: IntegralResult<T>, outer: IntegralResult<T>, opts: &QuadOptions<T>) -> IntegralResult<T> {
    let infinite = inner.infinite || outer.infinite;
    let classification = match (inner.classification, outer.classification) {
        (Classification::DivergentAtZero, _) => Classification::DivergentAtZero,
        (_, Classification::DivergentAtInfinity) => Classification::DivergentAtInfinity,
        (Classification::Convergent, Classification::Convergent) => {
            let v = inner.value + outer.value;
            if inner.abs_error_estimate + outer.abs_error_estimate <= opts.target(v) {
                Classification::Convergent
            } else {
                Classification::Undetermined
            }
        }
        _ => Classification::Undetermined,
    };
    let mut trace = inner.annulus_trace;
    trace.reverse();
    trace.extend(outer.annulus_trace);
    let note = match (inner.note, outer.note) {
        (Some(a), Some(b)) => Some(format!("{a}; {b}")),
        (a, b) => a.or(b),
    };
    IntegralResult {
        value: inner.value + outer.value,
        infinite,
        abs_error_estimate: inner.abs_error_estimate + outer.abs_error_estimate,
        classification,
        annulus_trace: trace,
        note,
    }
}

fn shells<T: Scalar, F: Fn(T) -> T>(f: &F, radius: T, dir: Direction, opts: &QuadOptions<T>) -> IntegralResult<T> {
    let gk = opts.gk();
    let two = T::lit(2.0);
    let divergent = match dir {
        Direction::Inward => Classification::DivergentAtZero,
        Direction::Outward => Classification::DivergentAtInfinity,
    };
    let mut trace: Vec<ShellEntry<T>> = Vec::new();
    let mut contributions: Vec<T> = Vec::new();
    let mut sum = T::zero();
    let mut quad_err = T::zero();
    let (mut lo, mut hi) = match dir {
        Direction::Inward => (radius / two, radius),
        Direction::Outward => (radius, radius * two),
    };
    let finish = |value: T, err: T, classification: Classification, trace: Vec<ShellEntry<T>>, note: Option<String>| {
        IntegralResult {
            value,
            infinite: matches!(classification, Classification::DivergentAtZero | Classification::DivergentAtInfinity),
            abs_error_estimate: err,
            classification,
            annulus_trace: trace,
            note,
        }
    };

    for k in 0..opts.max_shells {
        let r = integrate(f, lo, hi, &gk);
        let index = match dir {
            Direction::Inward => -(k as i32) - 1,
            Direction::Outward => k as i32,
        };
        trace.push(ShellEntry { index, inner: lo, outer: hi, partial: r.value });
        if r.non_finite {
            return finish(
                sum,
                T::infinity(),
                Classification::Undetermined,
                trace,
                Some(format!("non-finite integrand in shell {index}")),
            );
        }
        if !r.converged {
            return finish(
                sum,
                quad_err + r.abs_error,
                Classification::Undetermined,
                trace,
                Some(format!("shell {index} quadrature exceeded its budget")),
            );
        }
        sum += r.value;
        quad_err += r.abs_error;
        contributions.push(r.value.abs());
        match dir {
            Direction::Inward => {
                hi = lo;
                lo = lo / two;
            }
            Direction::Outward => {
                lo = hi;
                hi = hi * two;
            }
        }
        if !(lo.is_finite() && hi.is_finite()) || lo <= T::zero() {
            break;
        }

        let w = opts.window;
        if contributions.len() < w {
            continue;
        }
        let tail = &contributions[contributions.len() - w..];
        if tail.iter().all(|&c| c == T::zero()) {
            return finish(sum, quad_err, Classification::Convergent, trace, None);
        }
        let keep = T::one() - opts.divergence_slack;
        let nondecreasing = tail.windows(2).all(|p| p[1] >= keep * p[0]) && tail[0] > T::zero();
        if nondecreasing {
            if k + 1 >= opts.min_shells {
                return finish(sum, quad_err, divergent, trace, None);
            }
            continue;
        }
        // Geometric tail extrapolation from the trailing ratios.
        let last = tail[w - 1];
        if last == T::zero() {
            if quad_err <= opts.target(sum) {
                return finish(sum, quad_err, Classification::Convergent, trace, None);
            }
            continue;
        }
        let ratios: Vec<T> = tail.windows(2).filter(|p| p[0] > T::zero()).map(|p| p[1] / p[0]).collect();
        if ratios.is_empty() || ratios.iter().any(|&q| q >= keep) {
            continue;
        }
        let q_last = *ratios.last().unwrap();
        let q_max = ratios.iter().copied().fold(T::zero(), T::max);
        let q_min = ratios.iter().copied().fold(T::infinity(), T::min);
        let geo = |q: T| last * q / (T::one() - q);
        let estimate = geo(q_last);
        let spread = geo(q_max) - geo(q_min);
        // Sign of the tail follows the sign of the last shells.
        let sign = if trace.last().map(|s| s.partial < T::zero()).unwrap_or(false) { -T::one() } else { T::one() };
        let value = sum + sign * estimate;
        let err = quad_err + spread.abs() + T::epsilon() * estimate;
        if err <= opts.target(value) {
            return finish(value, err, Classification::Convergent, trace, None);
        }
    }
    finish(
        sum,
        quad_err,
        Classification::Undetermined,
        trace,
        Some("shell ratios did not settle within the shell budget".to_string()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QuadOptions<f64> {
        QuadOptions::default()
    }

    #[test]
    fn oscillatory_tail_of_sine_over_u() {
        // ∫_0^∞ sin(u)/u du = π/2
        let f = |u: f64| if u == 0.0 { 1.0 } else { u.sin() / u };
        let pi = std::f64::consts::PI;
        let r = oscillatory_tail(&f, 0.0, |j| (j + 1) as f64 * pi, &opts());
        assert!(r.converged, "{r:?}");
        assert!((r.value - pi / 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn half_line_helpers_have_no_sphere_factor() {
        let r = half_line_toward_zero(|u: f64| u.powf(-0.5), 1.0, &opts());
        assert!((r.value - 2.0).abs() < 1e-8);
        let r = half_line_toward_infinity(|u: f64| u.powi(-2), 1.0, &opts());
        assert!((r.value - 1.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn inverse_sqrt_on_unit_interval() {
        let r = integrate_radial(|r: f64| r.powf(-0.5), 0.0, 1.0, 1, &opts());
        assert_eq!(r.classification, Classification::Convergent);
        assert!((r.value - 4.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn gaussian_over_the_line() {
        let r = integrate_radial(|r: f64| (-r * r / 16.0).exp(), 0.0, f64::INFINITY, 1, &opts());
        assert_eq!(r.classification, Classification::Convergent);
        let exact = 4.0 * std::f64::consts::PI.sqrt();
        assert!((r.value - exact).abs() < 1e-8, "{} vs {}", r.value, exact);
    }

    #[test]
    fn zero_integrand() {
        let r = integrate_radial(|_r: f64| 0.0, 0.0, 1.0, 2, &opts());
        assert_eq!(r.classification, Classification::Convergent);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn annulus_in_three_dimensions() {
        // ∫_{1≤|ξ|≤2} dξ = 4π/3 (8 − 1)
        let r = integrate_radial(|_r: f64| 1.0, 1.0, 2.0, 3, &opts());
        let exact = 4.0 * std::f64::consts::PI / 3.0 * 7.0;
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn power_family_near_zero() {
        for (beta, d, expect) in [
            (0.5, 1, Classification::Convergent),
            (1.0, 1, Classification::DivergentAtZero),
            (1.5, 1, Classification::DivergentAtZero),
            (1.5, 2, Classification::Convergent),
        ] {
            let r = classify_improper(|r: f64| r.powf(-beta), d, Region::Ball(1.0), &opts());
            assert_eq!(r.classification, expect, "beta={beta} d={d}");
            assert_eq!(r.infinite, expect != Classification::Convergent);
        }
    }

    #[test]
    fn tail_decay_over_whole_line() {
        let r = classify_improper(|r: f64| 1.0 / (1.0 + r.powf(1.5)), 1, Region::Whole, &opts());
        assert_eq!(r.classification, Classification::Convergent);
        // ∫_0^∞ dr/(1+r^{3/2}) = (2π/3)/sin(2π/3)
        let exact = 2.0 * (2.0 * std::f64::consts::PI / 3.0) / (2.0 * std::f64::consts::PI / 3.0).sin();
        assert!((r.value - exact).abs() < 1e-7 * exact, "{} vs {exact}", r.value);
    }

    #[test]
    fn slow_tail_is_divergent_at_infinity() {
        let r = classify_improper(|r: f64| 1.0 / (1.0 + r), 1, Region::Whole, &opts());
        assert_eq!(r.classification, Classification::DivergentAtInfinity);
    }

    #[test]
    fn trace_partials_nonnegative() {
        let r = classify_improper(|r: f64| r.powf(-0.75) * (1.0 + r.sin().abs()), 1, Region::Ball(3.0), &opts());
        assert!(r.annulus_trace.iter().all(|s| s.partial >= 0.0));
    }

    #[test]
    fn direction_sets_are_unit() {
        for d in 1..=4 {
            let dirs: Vec<Vec<f64>> = direction_set(d, 64);
            assert!(!dirs.is_empty());
            for v in &dirs {
                assert_eq!(v.len(), d);
                assert!((crate::scalar::norm(v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spherical_mean_of_radial_function() {
        let dirs = direction_set::<f64>(3, QUADRATURE_DIRECTIONS);
        let prof = spherical_mean(|p: &[f64]| crate::scalar::norm(p).powi(2), &dirs);
        assert!((prof(2.0) - 4.0).abs() < 1e-12);
        // First-coordinate square averages to r²/3 on the sphere.
        let prof = spherical_mean(|p: &[f64]| p[0] * p[0], &dirs);
        assert!((prof(1.0) - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn f32_radial_integral() {
        let o = QuadOptions::<f32> { rel_tol: 1e-5, abs_tol: 1e-6, max_shells: 60, ..QuadOptions::default() };
        let r = integrate_radial(|r: f32| r.powf(-0.5), 0.0, 1.0, 1, &o);
        assert_eq!(r.classification, Classification::Convergent);
        assert!((r.value - 4.0).abs() < 1e-3);
    }
}
