//! Bernstein functions for variable-order subordination.

use crate::error::{FellerError, Result};
use crate::grid::log_space;
use crate::scalar::Scalar;

use super::functions::ArgFn;

#[derive(Debug, Clone)]
pub struct BernsteinSpec<T> {
    pub f: ArgFn<T>,
    /// `c` with `sup_x f(x, s) ≤ c(1 + s)`.
    pub growth: T,
    /// Declared `f(x, 0) = 0`.
    pub vanishes_at_zero: bool,
}

impl<T: Scalar> BernsteinSpec<T> {
    pub fn new(f: ArgFn<T>, growth: T, vanishes_at_zero: bool) -> Self {
        Self { f, growth, vanishes_at_zero }
    }

    #[inline]
    pub fn eval(&self, x: &[T], s: T) -> T {
        self.f.eval(x, s)
    }

    /// Default argument grid: 0 and 49 log-spaced points in `[1e-3, 1e3]`.
    pub fn default_arguments() -> Vec<T> {
        let mut s = vec![T::zero()];
        s.extend(log_space(T::lit(1e-3), T::lit(1e3), 49));
        s
    }

    /// Finite-difference checks on the sampled states and arguments:
    /// monotone, concave, `f(x, 0) = 0` when declared, and the growth bound.
    pub fn validate(&self, states: &[Vec<T>], arguments: &[T]) -> Result<()> {
        let tol = T::lit(1e-10);
        for x in states {
            let vals: Vec<T> = arguments.iter().map(|&s| self.eval(x, s)).collect();
            if let Some(bad) = vals.iter().position(|v| !v.is_finite() || *v < -tol) {
                return Err(FellerError::precondition(format!(
                    "f(x, s) negative or non-finite at x = {x:?}, s = {}",
                    arguments[bad]
                )));
            }
            if self.vanishes_at_zero && self.eval(x, T::zero()).abs() > tol {
                return Err(FellerError::precondition(format!("f(x, 0) ≠ 0 at x = {x:?}")));
            }
            let mut prev_slope: Option<T> = None;
            for k in 1..arguments.len() {
                let ds = arguments[k] - arguments[k - 1];
                let df = vals[k] - vals[k - 1];
                let scale = tol * (T::one() + vals[k].abs());
                if df < -scale {
                    return Err(FellerError::precondition(format!(
                        "f(x, ·) decreasing near s = {} at x = {x:?}",
                        arguments[k]
                    )));
                }
                let slope = df / ds;
                if let Some(p) = prev_slope {
                    if slope > p + tol * (T::one() + p.abs()) + scale / ds {
                        return Err(FellerError::precondition(format!(
                            "f(x, ·) not concave near s = {} at x = {x:?}",
                            arguments[k - 1]
                        )));
                    }
                }
                prev_slope = Some(slope);
                if vals[k] > self.growth * (T::one() + arguments[k]) + scale {
                    return Err(FellerError::precondition(format!(
                        "f(x, s) exceeds the growth bound {}(1 + s) at s = {}",
                        self.growth, arguments[k]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn spec(src: &str, c: f64) -> BernsteinSpec<f64> {
        BernsteinSpec::new(ArgFn::from_expr(Expr::parse(src).unwrap()), c, true)
    }

    #[test]
    fn accepts_standard_bernstein_functions() {
        let xs = vec![vec![0.0], vec![1.0]];
        let s = BernsteinSpec::default_arguments();
        spec("s", 1.0).validate(&xs, &s).unwrap();
        spec("sqrt(s)", 1.0).validate(&xs, &s).unwrap();
        spec("log(1 + s)", 1.0).validate(&xs, &s).unwrap();
        spec("s^(0.25 + 0.5*(1 + sin(x))/2)", 1.0).validate(&xs, &s).unwrap();
    }

    #[test]
    fn rejects_convex_or_decreasing() {
        let xs = vec![vec![0.0]];
        let s = BernsteinSpec::default_arguments();
        assert!(spec("s^2", 1e9).validate(&xs, &s).is_err());
        assert!(spec("-s", 1.0).validate(&xs, &s).is_err());
        assert!(spec("s + 1", 2.0).validate(&xs, &s).is_err());
        assert!(spec("2*s", 1.0).validate(&xs, &s).is_err());
    }
}
