//! Exit-time bound, the bump constant `c_u` and the small-time horizons.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::expr::{Bindings, Expr, VarKind};
use crate::grid::{ball_points, check_directions, lin_space};
use crate::quadrature::direction_set;
use crate::quadrature::gauss_kronrod::{gk21, integrate, nodes_and_weights, GkOptions};
use crate::scalar::{norm, Scalar};
use crate::special::{sphere_area, spherical_cosine_mean};
use crate::symbol::SymbolModel;

use super::envelope::Envelope;

/// Radial cutoff profile `u(|y|)` supported in the unit ball with `u(0) = 1`.
#[derive(Debug, Clone, Default)]
pub enum BumpSpec {
    /// `exp(1 − 1/(1 − s²))` for `s < 1`.
    #[default]
    Standard,
    /// A profile expression in `s`, taken as 0 for `s ≥ 1`.
    Profile(Expr),
}

impl BumpSpec {
    pub fn profile(expr: Expr) -> Result<Self> {
        expr.check(1, &[VarKind::Argument])?;
        let bump = Self::Profile(expr);
        bump.validate()?;
        Ok(bump)
    }

    /// Profile value at radius `s`.
    pub fn eval(&self, s: f64) -> f64 {
        if !(s < 1.0) {
            return 0.0;
        }
        match self {
            Self::Standard => (1.0 - 1.0 / (1.0 - s * s)).exp(),
            Self::Profile(e) => e.eval(&Bindings::<f64> { s, ..Bindings::state(&[]) }),
        }
    }

    /// Checks `u(0) = 1`, `0 ≤ u ≤ 1` and `u → 0` at the unit sphere.
    pub fn validate(&self) -> Result<()> {
        let u0 = self.eval(0.0);
        if (u0 - 1.0).abs() > 1e-12 {
            return Err(FellerError::precondition(format!("bump must equal 1 at the origin, got {u0}")));
        }
        for s in lin_space(0.0, 1.0 - 1e-9, 2001) {
            let v = self.eval(s);
            if !(-1e-14..=1.0 + 1e-12).contains(&v) {
                return Err(FellerError::precondition(format!("bump value {v} at s = {s} outside [0, 1]")));
            }
        }
        let edge = self.eval(1.0 - 1e-6);
        if edge.abs() > 1e-6 {
            return Err(FellerError::precondition(format!(
                "bump does not vanish at the unit sphere (u = {edge} at s = 1 - 1e-6)"
            )));
        }
        Ok(())
    }
}

static STANDARD_CONSTANT: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];

/// `c_u = ∫(1 + |ξ|²)|û(ξ)| dξ` with `û(ξ) = (2π)^{−d}∫e^{−i⟨y,ξ⟩}u(|y|)dy`.
///
/// The standard bump is computed once per dimension and cached.
pub fn bump_constant(d: usize, bump: &BumpSpec) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(FellerError::domain(format!("dimension {d} outside 1..=3")));
    }
    match bump {
        BumpSpec::Standard => Ok(*STANDARD_CONSTANT[d - 1].get_or_init(|| radial_constant(d, |k| standard_transform(d, k)))),
        BumpSpec::Profile(_) => {
            bump.validate()?;
            let omega: f64 = sphere_area(d);
            let scale = omega / (2.0 * std::f64::consts::PI).powi(d as i32);
            let gk = GkOptions { abs_tol: 1e-16, rel_tol: 1e-11, max_intervals: 4000 };
            // Real-line transform; values below the quadrature noise are dropped.
            Ok(radial_constant(d, |k| {
                let f = |rho: f64| bump.eval(rho) * spherical_cosine_mean(d, rho * k) * rho.powi(d as i32 - 1);
                let r = integrate(&f, 0.0, 1.0, &gk);
                if r.value.abs() <= 4.0 * r.abs_error {
                    0.0
                } else {
                    scale * r.value
                }
            }))
        }
    }
}

/// `ω_{d−1}∫_0^∞ (1 + k²)|û(k)|k^{d−1} dk`, summed over unit chunks until the
/// chunks become negligible.
fn radial_constant(d: usize, transform: impl Fn(f64) -> f64) -> f64 {
    const CHUNK: f64 = 1.0;
    const MAX_K: f64 = 6000.0;
    let omega: f64 = sphere_area(d);
    let mut total = 0.0f64;
    let mut quiet = 0;
    let mut a = 0.0;
    while a < MAX_K {
        let g = |k: f64| (1.0 + k * k) * k.powi(d as i32 - 1) * transform(k).abs();
        let (v, e, _) = gk21(&g, a, a + CHUNK);
        let piece = if e > 1e-13 * total.max(1e-300) {
            integrate(&g, a, a + CHUNK, &GkOptions { abs_tol: 1e-14 * total, rel_tol: 1e-10, max_intervals: 64 }).value
        } else {
            v
        };
        total += piece;
        quiet = if piece < 1e-15 * total { quiet + 1 } else { 0 };
        if quiet >= 20 {
            break;
        }
        a += CHUNK;
    }
    omega * total
}

// Contour half-height for the standard transform.
const CONTOUR_H: f64 = 1.0;

/// `(2π)^{−d}∫_{−1}^{1} R_d(y)e^{−iyk} dy` for the standard bump, where `R_d` is
/// its projection onto one axis; the path `y = τ − ih(1 − τ²)` avoids the
/// cancellation of the real-line integral at large `k`.
fn standard_transform(d: usize, k: f64) -> f64 {
    let mut acc = 0.0;
    for node in contour_nodes(d) {
        // e^{−iyk} = e^{−k·depth}·e^{−ikτ}
        let log_size = node.log_weight - k * node.depth;
        if log_size < -100.0 {
            continue;
        }
        let (sin, cos) = (k * node.tau).sin_cos();
        acc += (-k * node.depth).exp() * (node.weight.re * cos + node.weight.im * sin);
    }
    2.0 * acc / (2.0 * std::f64::consts::PI).powi(d as i32)
}

struct ContourNode {
    tau: f64,
    /// `−Im y`
    depth: f64,
    /// Quadrature weight times `R_d(y)·y'(τ)`.
    weight: Complex64,
    log_weight: f64,
}

fn contour_nodes(d: usize) -> &'static [ContourNode] {
    static NODES: [OnceLock<Vec<ContourNode>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    NODES[d - 1].get_or_init(|| build_contour_nodes(d))
}

/// Composite 21-point rule on `τ ∈ [0, 1)`, graded towards `τ = 1` where the
/// integrand concentrates for large `k`.
fn build_contour_nodes(d: usize) -> Vec<ContourNode> {
    let mut edges = vec![0.0];
    let mut tau: f64 = 0.0;
    while tau < 1.0 - 4e-4 {
        let eps = 1.0 - tau;
        let width = (20.0 * eps * eps).min(0.02);
        tau = (tau + width).min(1.0 - 4e-4);
        edges.push(tau);
    }
    let (x, w) = nodes_and_weights();
    let h = CONTOUR_H;
    let mut out = Vec::with_capacity(edges.len() * 21);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let c = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            let t = c + half * xi;
            let y = Complex64::new(t, -h * (1.0 - t * t));
            let dy = Complex64::new(1.0, 2.0 * h * t);
            let weight = projection(d, y) * dy * (half * wi);
            out.push(ContourNode { tau: t, depth: h * (1.0 - t * t), weight, log_weight: weight.norm().ln() });
        }
    }
    out
}

/// Projection `R_d(y) = ∫_{R^{d−1}} u(|(y, y')|) dy'` continued to complex `y`
/// with `Re(1 − y²) > 0`.
fn projection(d: usize, y: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let w = one - y * y;
    let e = std::f64::consts::E;
    match d {
        1 => (one - one / w).exp(),
        2 => {
            // 2√w ∫_0^1 exp(1 − 1/((1 − s²)w)) ds
            let inner = complex_integral(|s| (-(one / w) * (s * s / (1.0 - s * s))).exp());
            2.0 * e * w.sqrt() * (-one / w).exp() * inner
        }
        _ => {
            // π w ∫_0^1 exp(1 − 1/((1 − s)w)) ds
            let inner = complex_integral(|s| (-(one / w) * (s / (1.0 - s))).exp());
            std::f64::consts::PI * e * w * (-one / w).exp() * inner
        }
    }
}

fn complex_integral(f: impl Fn(f64) -> Complex64) -> Complex64 {
    let gk = GkOptions { abs_tol: 1e-300, rel_tol: 1e-13, max_intervals: 500 };
    let guard = |s: f64| if s >= 1.0 { Complex64::new(0.0, 0.0) } else { f(s) };
    let re = integrate(&|s: f64| guard(s).re, 0.0, 1.0, &gk);
    let im = integrate(&|s: f64| guard(s).im, 0.0, 1.0, &gk);
    Complex64::new(re.value, im.value)
}

/// Exit-time probability bound at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeBound {
    /// `2·c_u·t·sup |p|`, possibly above 1.
    pub raw: f64,
    /// `raw` clipped to `[0, 1]`.
    pub clipped: f64,
    pub c_u: f64,
    /// `sup_{|y−x|≤r} sup_{|ξ|≤1/r} |p(y, ξ)|` over the sampled points.
    pub sup: f64,
}

/// Upper bound for `P^x(τ_{B(x,r)} ≤ t)`.
pub fn exit_time_bound<T: Scalar>(
    model: &SymbolModel<T>,
    x: &[T],
    r: T,
    t: T,
    bump: &BumpSpec,
) -> Result<ExitTimeBound> {
    let d = model.dimension();
    if x.len() != d {
        return Err(FellerError::domain(format!("state has dimension {}, model has {d}", x.len())));
    }
    if !(r > T::zero()) || !(t > T::zero()) {
        return Err(FellerError::domain("radius and time must be positive"));
    }
    let c_u = bump_constant(d, bump)?;
    let sup = symbol_sup(model, x, r)?;
    let raw = 2.0 * c_u * t.to_f64_lossy() * sup;
    Ok(ExitTimeBound { raw, clipped: raw.clamp(0.0, 1.0), c_u, sup })
}

fn symbol_sup<T: Scalar>(model: &SymbolModel<T>, x: &[T], r: T) -> Result<f64> {
    let d = model.dimension();
    let states: Vec<Vec<T>> = if model.depends_on_state() {
        let n = [201, 33, 11][d - 1];
        ball_points(d, r, n).into_iter().map(|p| p.iter().zip(x).map(|(a, b)| *a + *b).collect()).collect()
    } else {
        vec![x.to_vec()]
    };
    let rho = T::one() / r;
    if let Some(spec) = model.stable_like_spec() {
        // |ξ|^{α(y)} is maximal on the sphere |ξ| = 1/r.
        let mut best = T::zero();
        for y in &states {
            best = best.max(rho.powf(spec.alpha_at(y)));
        }
        return Ok(best.to_f64_lossy());
    }
    let radii: Vec<T> = (1..=32).map(|j| rho * T::from_usize_lossy(j) / T::lit(32.0)).collect();
    let dirs = direction_set::<T>(d, check_directions(d));
    let mut best = 0.0f64;
    for y in &states {
        for &s in &radii {
            for u in &dirs {
                let xi: Vec<T> = u.iter().map(|&c| c * s).collect();
                best = best.max(model.eval(y, &xi)?.norm().to_f64_lossy());
            }
        }
    }
    Ok(best)
}

/// Horizons of the small-time estimate at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizons {
    pub t1: f64,
    pub t2: f64,
    pub g1: f64,
    pub g2: f64,
    /// Local sector constant `sup|Im p|/inf Re p` at `ξ`.
    pub sector: f64,
    /// `(1 − c − ε)·q_inf(ξ)`: for `t ≤ t2`, `sup_x|λ_t(x, ξ)| ≤ exp(−rate·t)`.
    pub rate: f64,
    /// The constant of the exit-time estimate, `2·c_u`.
    pub c1: f64,
}

pub fn small_time_horizon<T: Scalar>(env: &Envelope<T>, xi: &[T], eps: T) -> Result<Horizons> {
    let d = env.dimension();
    if xi.len() != d {
        return Err(FellerError::domain(format!("frequency has dimension {}, envelope has {d}", xi.len())));
    }
    let r = norm(xi);
    if r == T::zero() {
        return Err(FellerError::precondition("horizons need ξ ≠ 0"));
    }
    let v = env.at(xi)?;
    if !(v.q_inf > T::zero()) {
        return Err(FellerError::precondition(format!("q_inf(ξ) = {} must be positive", v.q_inf)));
    }
    let sector = v.im_sup / v.q_inf;
    if !(eps > T::zero() && eps < T::one() - sector) {
        return Err(FellerError::domain(format!(
            "ε = {eps} outside (0, 1 − c) with local sector constant c = {sector}"
        )));
    }
    let four = T::lit(4.0);
    let g1 = eps / (four * r) * (v.q_inf / (T::one() + v.im_sup)).min(T::one());
    let g2 = eps / (four * r) * v.q_inf / v.re_sup;
    let t1 = eps / (T::lit(8.0) * v.q_sup);
    let c1 = T::lit(2.0 * bump_constant(d, &BumpSpec::Standard)?);
    let s1 = env.q_sup_on_ball(T::one() / g1)?;
    let s2 = env.q_sup_on_ball(T::one() / g2)?;
    let t2 = t1.min(eps * v.q_inf / (T::lit(2.0) * c1 * v.q_sup * (T::lit(3.0) * s1 + s2)));
    Ok(Horizons {
        t1: t1.to_f64_lossy(),
        t2: t2.to_f64_lossy(),
        g1: g1.to_f64_lossy(),
        g2: g2.to_f64_lossy(),
        sector: sector.to_f64_lossy(),
        rate: ((T::one() - sector - eps) * v.q_inf).to_f64_lossy(),
        c1: c1.to_f64_lossy(),
    })
}
