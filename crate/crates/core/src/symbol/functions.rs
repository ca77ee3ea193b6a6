//! Labelled function handles used inside symbol definitions.

use std::fmt;
use std::sync::Arc;

use crate::expr::{Bindings, Expr};
use crate::scalar::Scalar;

type StateClosure<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type ArgClosure<T> = Arc<dyn Fn(&[T], T) -> T + Send + Sync>;
type JumpClosure<T> = Arc<dyn Fn(&[T], &[T]) -> T + Send + Sync>;

/// A scalar function of the state `x`.
#[derive(Clone)]
pub struct StateFn<T> {
    label: String,
    state_dependent: bool,
    constant: Option<T>,
    f: StateClosure<T>,
}

impl<T: Scalar> StateFn<T> {
    pub fn constant(v: T) -> Self {
        Self { label: format!("{v}"), state_dependent: false, constant: Some(v), f: Arc::new(move |_| v) }
    }

    pub fn from_expr(e: Expr) -> Self {
        let label = e.source().to_string();
        let state_dependent = e.depends_on_state();
        let constant = (!state_dependent).then(|| e.eval(&Bindings::state(&[])));
        Self { label, state_dependent, constant, f: Arc::new(move |x| e.eval(&Bindings::state(x))) }
    }

    /// Wraps a closure; it is treated as state dependent.
    pub fn new(label: impl Into<String>, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self { label: label.into(), state_dependent: true, constant: None, f: Arc::new(f) }
    }

    /// The value when the function is known to be constant.
    pub fn constant_value(&self) -> Option<T> {
        self.constant
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depends_on_state(&self) -> bool {
        self.state_dependent
    }
}

impl<T> fmt::Debug for StateFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateFn({})", self.label)
    }
}

/// A function `(x, s) ↦ f(x, s)`, used for Bernstein functions.
#[derive(Clone)]
pub struct ArgFn<T> {
    label: String,
    state_dependent: bool,
    f: ArgClosure<T>,
}

impl<T: Scalar> ArgFn<T> {
    pub fn from_expr(e: Expr) -> Self {
        let label = e.source().to_string();
        let state_dependent = e.depends_on_state();
        Self {
            label,
            state_dependent,
            f: Arc::new(move |x, s| e.eval(&Bindings { x, xi: &[], z: &[], s })),
        }
    }

    pub fn new(label: impl Into<String>, f: impl Fn(&[T], T) -> T + Send + Sync + 'static) -> Self {
        Self { label: label.into(), state_dependent: true, f: Arc::new(f) }
    }

    #[inline]
    pub fn eval(&self, x: &[T], s: T) -> T {
        (self.f)(x, s)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depends_on_state(&self) -> bool {
        self.state_dependent
    }
}

impl<T> fmt::Debug for ArgFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArgFn({})", self.label)
    }
}

/// A Lévy density `(x, z) ↦ n(x, z)` on `R^d \ {0}`.
#[derive(Clone)]
pub struct JumpFn<T> {
    label: String,
    state_dependent: bool,
    f: JumpClosure<T>,
}

impl<T: Scalar> JumpFn<T> {
    pub fn from_expr(e: Expr) -> Self {
        let label = e.source().to_string();
        let state_dependent = e.depends_on_state();
        Self {
            label,
            state_dependent,
            f: Arc::new(move |x, z| e.eval(&Bindings { x, xi: &[], z, s: T::zero() })),
        }
    }

    pub fn new(label: impl Into<String>, f: impl Fn(&[T], &[T]) -> T + Send + Sync + 'static) -> Self {
        Self { label: label.into(), state_dependent: true, f: Arc::new(f) }
    }

    #[inline]
    pub fn eval(&self, x: &[T], z: &[T]) -> T {
        (self.f)(x, z)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depends_on_state(&self) -> bool {
        self.state_dependent
    }
}

impl<T> fmt::Debug for JumpFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JumpFn({})", self.label)
    }
}
