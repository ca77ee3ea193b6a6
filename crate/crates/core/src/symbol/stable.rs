//! Stable-like symbols `|ξ|^{α(x)}`.

use crate::error::{FellerError, Result};
use crate::scalar::{norm, Scalar};
use crate::special::gamma;

use super::functions::{JumpFn, StateFn};
use super::levy::{JumpDensity, LevyCharacteristics};

/// `C_α = α·2^{α−1}·Γ((α+d)/2) / (π^{d/2}·Γ(1−α/2))`, the constant for which
/// `C_α ∫(1 − cos⟨z,ξ⟩)|z|^{−d−α} dz = |ξ|^α`.
pub fn stable_like_constant<T: Scalar>(alpha: T, d: usize) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::lit(2.0)) {
        return Err(FellerError::domain(format!("stability index {alpha} outside (0, 2)")));
    }
    if d == 0 {
        return Err(FellerError::domain("dimension must be positive"));
    }
    let two = T::lit(2.0);
    let half_d = T::from_usize_lossy(d) / two;
    let num = alpha * two.powf(alpha - T::one()) * gamma((alpha + T::from_usize_lossy(d)) / two);
    let den = T::PI().powf(half_d) * gamma(T::one() - alpha / two);
    Ok(num / den)
}

/// Variable-order stable-like symbol `p(x, ξ) = |ξ|^{α(x)}`.
#[derive(Debug, Clone)]
pub struct StableLikeSpec<T> {
    dimension: usize,
    pub alpha: StateFn<T>,
    pub lower: T,
    pub upper: T,
    /// Declared `α ∈ C¹_b`; recorded, not verified.
    pub smooth_c1: bool,
}

impl<T: Scalar> StableLikeSpec<T> {
    pub fn new(dimension: usize, alpha: StateFn<T>, lower: T, upper: T, smooth_c1: bool) -> Result<Self> {
        if dimension == 0 {
            return Err(FellerError::config("dimension must be positive"));
        }
        if !(lower > T::zero()) {
            return Err(FellerError::config(format!("lower stability bound {lower} must be positive")));
        }
        if !(upper < T::lit(2.0)) {
            return Err(FellerError::config(format!("upper stability bound {upper} must be below 2")));
        }
        if lower > upper {
            return Err(FellerError::config("lower stability bound exceeds the upper bound"));
        }
        Ok(Self { dimension, alpha, lower, upper, smooth_c1 })
    }

    /// Constant index `α`.
    pub fn constant(dimension: usize, alpha: T) -> Result<Self> {
        Self::new(dimension, StateFn::constant(alpha), alpha, alpha, true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    pub fn alpha_at(&self, x: &[T]) -> T {
        self.alpha.eval(x)
    }

    #[inline]
    pub fn eval(&self, x: &[T], xi: &[T]) -> T {
        let r = norm(xi);
        if r == T::zero() {
            T::zero()
        } else {
            r.powf(self.alpha_at(x))
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.alpha.depends_on_state()
    }

    /// Checks `α̲ ≤ α(x) ≤ ᾱ` at every sampled state.
    pub fn validate(&self, states: &[Vec<T>]) -> Result<()> {
        let slack = T::lit(1e-12);
        for x in states {
            let a = self.alpha_at(x);
            if !(a >= self.lower - slack && a <= self.upper + slack) {
                return Err(FellerError::precondition(format!(
                    "α(x) = {a} at x = {x:?} outside the declared bounds [{}, {}]",
                    self.lower, self.upper
                )));
            }
        }
        Ok(())
    }

    /// Characteristics `(0, 0, 0, C_{α(x)}|z|^{−d−α(x)} dz)` of the same symbol.
    pub fn levy_characteristics(&self) -> LevyCharacteristics<T> {
        let d = self.dimension;
        let alpha = self.alpha.clone();
        let density = JumpFn::new(format!("C_α|z|^(-d-α), α = {}", alpha.label()), move |x: &[T], z: &[T]| {
            let a = alpha.eval(x);
            let c = stable_like_constant(a, d).unwrap_or_else(|_| T::nan());
            c * norm(z).powf(-T::from_usize_lossy(d) - a)
        });
        let beta = T::from_usize_lossy(d) + self.upper;
        LevyCharacteristics::zero(d)
            .with_jumps(JumpDensity::new(density, beta, true))
            .expect("stable densities are integrable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn constant_for_cauchy_is_one_over_pi() {
        let c: f64 = stable_like_constant(1.0, 1).unwrap();
        assert!((c - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn constant_domain() {
        assert!(stable_like_constant(0.0f64, 1).is_err());
        assert!(stable_like_constant(2.0f64, 1).is_err());
        assert!(stable_like_constant(-0.5f64, 2).is_err());
    }

    #[test]
    fn constant_near_two_vanishes_linearly() {
        // Γ(1 − α/2) ~ 2/(2 − α), so C_α/(2 − α) tends to 2Γ((2+d)/2)/π^{d/2} as α → 2.
        for d in 1..=3usize {
            let a = 1.99f64;
            let c = stable_like_constant(a, d).unwrap();
            let limit = 2.0 * gamma((2.0 + d as f64) / 2.0) / std::f64::consts::PI.powf(d as f64 / 2.0);
            let ratio = c / (2.0 - a);
            assert!((ratio / limit - 1.0).abs() < 0.02, "d={d}: {ratio} vs {limit}");
        }
    }

    #[test]
    fn spec_validation() {
        assert!(StableLikeSpec::new(1, StateFn::constant(1.0f64), 0.0, 1.0, true).is_err());
        assert!(StableLikeSpec::new(1, StateFn::constant(1.0f64), 1.0, 2.0, true).is_err());
        let alpha = StateFn::from_expr(Expr::parse("1.5 + 0.3*sin(x)").unwrap());
        let s = StableLikeSpec::new(1, alpha, 1.2, 1.8, true).unwrap();
        let xs: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64 * 0.3]).collect();
        s.validate(&xs).unwrap();
        let tight = StableLikeSpec { lower: 1.3, ..s };
        assert!(tight.validate(&xs).is_err());
    }
}
