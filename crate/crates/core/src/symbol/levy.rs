//! Lévy characteristics `(c, b, a, ν)` and the Lévy–Khintchine integral.

use num_complex::Complex;

use crate::error::{FellerError, Result};
use crate::expr::Var;
use crate::quadrature::{half_line_toward_infinity, half_line_toward_zero, oscillatory_tail, IntegralResult, QuadOptions};
use crate::scalar::{norm, Scalar};
use crate::special::{one_minus_spherical_cosine_mean, spherical_cosine_mean, spherical_cosine_zero, sphere_area};

use super::functions::{JumpFn, StateFn};

/// Lévy density `z ↦ n(x, z)` together with its declared behaviour at `z = 0`.
#[derive(Debug, Clone)]
pub struct JumpDensity<T> {
    pub density: JumpFn<T>,
    /// `β` with `n(x, z) = O(|z|^{-β})` as `z → 0`.
    pub singularity_exponent: T,
    /// The density depends on `z` only through `|z|`. Required for d ≥ 2.
    pub radial: bool,
}

impl<T: Scalar> JumpDensity<T> {
    pub fn new(density: JumpFn<T>, singularity_exponent: T, radial: bool) -> Self {
        Self { density, singularity_exponent, radial }
    }

    /// Builds a density from an expression; radial when only `norm_z` is used.
    pub fn from_expr(e: crate::expr::Expr, singularity_exponent: T) -> Self {
        let radial = !e.variables().iter().any(|v| matches!(v, Var::Z(_)));
        Self::new(JumpFn::from_expr(e), singularity_exponent, radial)
    }
}

/// The characteristics `(c(x), b(x), a(x), n(x, z) dz)` of a symbol.
#[derive(Debug, Clone)]
pub struct LevyCharacteristics<T> {
    dimension: usize,
    pub killing: StateFn<T>,
    pub drift: Vec<StateFn<T>>,
    /// Row-major `d × d` diffusion matrix.
    pub diffusion: Vec<Vec<StateFn<T>>>,
    pub jumps: Option<JumpDensity<T>>,
    pub quad: QuadOptions<T>,
}

impl<T: Scalar> LevyCharacteristics<T> {
    /// Characteristics with every component zero.
    pub fn zero(dimension: usize) -> Self {
        assert!(dimension >= 1);
        let z = StateFn::constant(T::zero());
        Self {
            dimension,
            killing: z.clone(),
            drift: vec![z.clone(); dimension],
            diffusion: vec![vec![z; dimension]; dimension],
            jumps: None,
            quad: QuadOptions::default(),
        }
    }

    pub fn with_killing(mut self, c: StateFn<T>) -> Self {
        self.killing = c;
        self
    }

    pub fn with_drift(mut self, b: Vec<StateFn<T>>) -> Result<Self> {
        if b.len() != self.dimension {
            return Err(FellerError::config("drift length must equal the dimension"));
        }
        self.drift = b;
        Ok(self)
    }

    pub fn with_diffusion(mut self, a: Vec<Vec<StateFn<T>>>) -> Result<Self> {
        if a.len() != self.dimension || a.iter().any(|r| r.len() != self.dimension) {
            return Err(FellerError::config("diffusion matrix must be d × d"));
        }
        self.diffusion = a;
        Ok(self)
    }

    pub fn with_jumps(mut self, jumps: JumpDensity<T>) -> Result<Self> {
        let d = T::from_usize_lossy(self.dimension);
        if !(jumps.singularity_exponent < d + T::lit(2.0)) {
            return Err(FellerError::config(format!(
                "singularity exponent {} makes ∫(1∧|z|²)n dz diverge in dimension {}",
                jumps.singularity_exponent, self.dimension
            )));
        }
        if self.dimension > 1 && !jumps.radial {
            return Err(FellerError::config("jump densities in dimension ≥ 2 must be radial"));
        }
        self.jumps = Some(jumps);
        Ok(self)
    }

    pub fn with_quadrature(mut self, quad: QuadOptions<T>) -> Self {
        self.quad = quad;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Known to produce a real symbol: no drift and a radial (hence symmetric) density.
    pub fn is_structurally_real(&self) -> bool {
        self.drift.iter().all(|b| b.constant_value() == Some(T::zero()))
            && self.jumps.as_ref().is_none_or(|j| j.radial)
    }

    pub fn depends_on_state(&self) -> bool {
        self.killing.depends_on_state()
            || self.drift.iter().any(StateFn::depends_on_state)
            || self.diffusion.iter().flatten().any(StateFn::depends_on_state)
            || self.jumps.as_ref().is_some_and(|j| j.density.depends_on_state())
    }

    pub fn is_conservative(&self) -> bool {
        self.killing.constant_value() == Some(T::zero())
    }

    /// `p(x, ξ)` by the Lévy–Khintchine formula.
    pub fn eval(&self, x: &[T], xi: &[T]) -> Result<Complex<T>> {
        let mut re = self.killing.eval(x);
        let mut im = T::zero();
        for (j, bj) in self.drift.iter().enumerate() {
            im -= bj.eval(x) * xi[j];
        }
        let mut quad = T::zero();
        for (j, row) in self.diffusion.iter().enumerate() {
            for (k, ajk) in row.iter().enumerate() {
                quad += xi[j] * ajk.eval(x) * xi[k];
            }
        }
        re += T::lit(0.5) * quad;
        if let Some(jumps) = &self.jumps {
            let j = self.jump_part(jumps, x, xi)?;
            re += j.re;
            im += j.im;
        }
        Ok(Complex::new(re, im))
    }

    fn jump_part(&self, jumps: &JumpDensity<T>, x: &[T], xi: &[T]) -> Result<Complex<T>> {
        let omega = norm(xi);
        if omega == T::zero() {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        let d = self.dimension;
        if d == 1 {
            let plus = |u: T| jumps.density.eval(x, &[u]);
            let minus = |u: T| jumps.density.eval(x, &[-u]);
            let even = |u: T| plus(u) + minus(u);
            let re = self.cosine_part(&even, omega, 1)?;
            let im = if jumps.radial { T::zero() } else { self.sine_part(&|u| plus(u) - minus(u), xi[0])? };
            Ok(Complex::new(re, im))
        } else {
            let area: T = sphere_area(d);
            let weight = |u: T| {
                let mut z = vec![T::zero(); d];
                z[0] = u;
                let v = jumps.density.eval(x, &z);
                if v == T::zero() {
                    T::zero()
                } else {
                    area * v * u.powi(d as i32 - 1)
                }
            };
            let re = self.cosine_part(&weight, omega, d)?;
            Ok(Complex::new(re, T::zero()))
        }
    }

    /// `∫_0^∞ (1 − K_d(ωu)) w(u) du` with `K_d` the spherical mean of the cosine.
    fn cosine_part<W: Fn(T) -> T>(&self, w: &W, omega: T, d: usize) -> Result<T> {
        let eps = T::one() / omega;
        let near = |u: T| {
            let v = w(u);
            if v == T::zero() {
                T::zero()
            } else {
                one_minus_spherical_cosine_mean(d, omega * u) * v
            }
        };
        let inner = half_line_toward_zero(near, eps, &self.quad);
        let mass = half_line_toward_infinity(w, eps, &self.quad);
        let osc = |u: T| {
            let v = w(u);
            if v == T::zero() {
                T::zero()
            } else {
                spherical_cosine_mean(d, omega * u) * v
            }
        };
        let tail = oscillatory_tail(&osc, eps, |k| spherical_cosine_zero::<T>(d, k) / omega, &self.quad);
        require(&inner, "jump integral near the origin")?;
        require(&mass, "jump mass away from the origin")?;
        let value = inner.value + mass.value - tail.value;
        let err = inner.abs_error_estimate + mass.abs_error_estimate + tail.abs_error;
        if !tail.converged || err > self.target(value) {
            return Err(numerical("oscillatory part of the jump integral", err));
        }
        Ok(value)
    }

    /// `∫_0^∞ (uξ·1_{u≤1} − sin(uξ)) a(u) du` for the odd part `a(u) = n(u) − n(−u)` in d=1.
    fn sine_part<A: Fn(T) -> T>(&self, a: &A, xi: T) -> Result<T> {
        let omega = xi.abs();
        let sign = xi.signum();
        let six = T::lit(6.0);
        let near = |u: T| {
            let v = a(u);
            if v == T::zero() {
                return T::zero();
            }
            let y = u * omega;
            let diff = if y < T::lit(0.1) {
                let y2 = y * y;
                y * y2 / six - y * y2 * y2 / T::lit(120.0) + y * y2 * y2 * y2 / T::lit(5040.0)
            } else {
                y - y.sin()
            };
            diff * v
        };
        let inner = half_line_toward_zero(near, T::one(), &self.quad);
        require(&inner, "odd jump integral on the unit ball")?;
        let first = (omega / T::PI()).floor() + T::one();
        let osc = |u: T| (u * omega).sin() * a(u);
        let tail = oscillatory_tail(&osc, T::one(), |k| (first + T::from_usize_lossy(k)) * T::PI() / omega, &self.quad);
        let value = inner.value - tail.value;
        let err = inner.abs_error_estimate + tail.abs_error;
        if !tail.converged || err > self.target(value).max(self.quad.abs_tol) {
            return Err(numerical("odd part of the jump integral", err));
        }
        Ok(sign * value)
    }

    fn target(&self, value: T) -> T {
        // Three pieces share the budget.
        T::lit(3.0) * self.quad.abs_tol.max(self.quad.rel_tol * value.abs())
    }

    /// Numerical estimate of `∫(1 ∧ |z|²) n(x, z) dz`.
    pub fn integrability_witness(&self, x: &[T]) -> Option<IntegralResult<T>> {
        let jumps = self.jumps.as_ref()?;
        let d = self.dimension;
        let w = |u: T| -> T {
            if d == 1 {
                jumps.density.eval(x, &[u]) + jumps.density.eval(x, &[-u])
            } else {
                let mut z = vec![T::zero(); d];
                z[0] = u;
                let v = jumps.density.eval(x, &z);
                sphere_area::<T>(d) * v * u.powi(d as i32 - 1)
            }
        };
        let inner = half_line_toward_zero(|u| u * u * w(u), T::one(), &self.quad);
        let outer = half_line_toward_infinity(w, T::one(), &self.quad);
        let classification = if !inner.is_convergent() {
            inner.classification
        } else {
            outer.classification
        };
        let mut trace = inner.annulus_trace;
        trace.reverse();
        trace.extend(outer.annulus_trace);
        Some(IntegralResult {
            value: inner.value + outer.value,
            infinite: inner.infinite || outer.infinite,
            abs_error_estimate: inner.abs_error_estimate + outer.abs_error_estimate,
            classification,
            annulus_trace: trace,
            note: inner.note.or(outer.note),
        })
    }

    /// Checks the characteristics at the sampled states: `c ≥ 0`, `a` symmetric
    /// nonnegative definite, `n ≥ 0` and a finite integrability witness.
    pub fn validate(&self, states: &[Vec<T>]) -> Result<()> {
        let tol = T::lit(1e-12);
        for x in states {
            if self.killing.eval(x) < T::zero() {
                return Err(FellerError::precondition(format!("negative killing rate at x = {x:?}")));
            }
            let a: Vec<Vec<T>> = self.diffusion.iter().map(|r| r.iter().map(|f| f.eval(x)).collect()).collect();
            for j in 0..self.dimension {
                for k in 0..j {
                    if (a[j][k] - a[k][j]).abs() > tol * (T::one() + a[j][k].abs()) {
                        return Err(FellerError::precondition(format!("diffusion matrix not symmetric at x = {x:?}")));
                    }
                }
            }
            if !is_nonnegative_definite(&a) {
                return Err(FellerError::precondition(format!(
                    "diffusion matrix not nonnegative definite at x = {x:?}"
                )));
            }
            if let Some(jumps) = &self.jumps {
                for &u in &[T::lit(1e-3), T::lit(0.1), T::one(), T::lit(10.0)] {
                    let mut z = vec![T::zero(); self.dimension];
                    z[0] = u;
                    let plus = jumps.density.eval(x, &z);
                    z[0] = -u;
                    let minus = jumps.density.eval(x, &z);
                    if plus < T::zero() || minus < T::zero() || !plus.is_finite() || !minus.is_finite() {
                        return Err(FellerError::precondition(format!("jump density negative or non-finite at x = {x:?}")));
                    }
                }
                let w = self.integrability_witness(x).expect("jumps present");
                if !w.is_convergent() {
                    return Err(FellerError::precondition(format!(
                        "∫(1∧|z|²)n(x,z)dz not finite at x = {x:?} ({:?})",
                        w.classification
                    )));
                }
            }
        }
        Ok(())
    }
}

fn require<T: Scalar>(r: &IntegralResult<T>, what: &str) -> Result<()> {
    if r.is_convergent() {
        Ok(())
    } else {
        let detail = r.note.clone().unwrap_or_else(|| format!("{:?}", r.classification));
        Err(FellerError::Numerical {
            message: format!("{what}: {detail}"),
            error_estimate: r.abs_error_estimate.to_f64_lossy(),
        })
    }
}

fn numerical<T: Scalar>(what: &str, err: T) -> FellerError {
    FellerError::Numerical { message: format!("{what} missed its tolerance"), error_estimate: err.to_f64_lossy() }
}

/// Cholesky-style test with a small diagonal allowance for rounding.
fn is_nonnegative_definite<T: Scalar>(a: &[Vec<T>]) -> bool {
    let n = a.len();
    let scale = a.iter().enumerate().map(|(i, r)| r[i].abs()).fold(T::zero(), T::max);
    let jitter = T::lit(1e-12) * (T::one() + scale);
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                let v = s + jitter;
                if v < T::zero() {
                    return false;
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = if l[j][j] > T::zero() { s / l[j][j] } else { T::zero() };
            }
        }
    }
    true
}
