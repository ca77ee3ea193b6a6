//! State-dependent symbols `p(x, ξ)`.

pub mod bernstein;
pub mod checks;
pub mod functions;
pub mod levy;
pub mod stable;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::expr::{Bindings, Expr, VarKind};
use crate::grid::{box_points, check_directions, frequency_points};
use crate::quadrature::QuadOptions;
use crate::scalar::{dot, norm, Scalar};

pub use bernstein::BernsteinSpec;
pub use functions::{ArgFn, JumpFn, StateFn};
pub use levy::{JumpDensity, LevyCharacteristics};
pub use stable::{stable_like_constant, StableLikeSpec};

/// x-independent exponents with exactly samplable laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExponentFamily<T> {
    Zero,
    /// `D|ξ|²`, i.e. Brownian motion with covariance `2D·t·I`.
    Brownian { diffusion: T },
    /// `scale·|ξ|^α`, rotationally symmetric.
    AlphaStable { alpha: T, scale: T },
    /// `λ(1 − e^{−σ²|ξ|²/2})`: rate `λ`, jumps `N(0, σ²I)`.
    CompoundPoisson { rate: T, jump_std: T },
}

/// `ψ(ξ) = family(ξ) − i⟨b, ξ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyExponent<T> {
    pub family: ExponentFamily<T>,
    pub drift: Vec<T>,
}

impl<T: Scalar> LevyExponent<T> {
    pub fn real_part(&self, xi: &[T]) -> T {
        let r2 = dot(xi, xi);
        match self.family {
            ExponentFamily::Zero => T::zero(),
            ExponentFamily::Brownian { diffusion } => diffusion * r2,
            ExponentFamily::AlphaStable { alpha, scale } => {
                if r2 == T::zero() {
                    T::zero()
                } else if alpha == T::lit(2.0) {
                    scale * r2
                } else {
                    scale * norm(xi).powf(alpha)
                }
            }
            ExponentFamily::CompoundPoisson { rate, jump_std } => {
                let q = jump_std * jump_std * r2 * T::lit(0.5);
                -rate * (-q).exp_m1()
            }
        }
    }

    pub fn eval(&self, xi: &[T]) -> Complex<T> {
        Complex::new(self.real_part(xi), -dot(&self.drift, xi))
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.drift.len() != d {
            return Err(FellerError::config("drift length must equal the dimension"));
        }
        let ok = match self.family {
            ExponentFamily::Zero => true,
            ExponentFamily::Brownian { diffusion } => diffusion >= T::zero(),
            ExponentFamily::AlphaStable { alpha, scale } => alpha > T::zero() && alpha <= T::lit(2.0) && scale >= T::zero(),
            ExponentFamily::CompoundPoisson { rate, jump_std } => rate >= T::zero() && jump_std > T::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(FellerError::config(format!("invalid exponent parameters {:?}", self.family)))
        }
    }
}

#[derive(Debug, Clone)]
pub enum ClosedForm<T> {
    Exponent(LevyExponent<T>),
    /// `Re p` and optional `Im p` as expressions in `x` and `ξ`.
    Expression { re: Expr, im: Option<Expr> },
}

#[derive(Debug, Clone)]
pub enum SymbolKind<T> {
    ClosedForm(ClosedForm<T>),
    LevyCharacteristics(LevyCharacteristics<T>),
    StableLike(StableLikeSpec<T>),
    Subordinated { base: Box<SymbolModel<T>>, bernstein: BernsteinSpec<T> },
    Symmetrized(Box<SymbolModel<T>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    ClosedForm,
    LevyCharacteristics,
    StableLike,
    Subordinated,
    Symmetrized,
}

/// A symbol `p: R^d × R^d → C`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SymbolModel<T> {
    pub name: String,
    dimension: usize,
    /// Declares `p(x, 0) = 0` for all `x`.
    conservative: bool,
    kind: SymbolKind<T>,
}

/// Sample points used for validation and precondition checks.
#[derive(Debug, Clone)]
pub struct Probe<T> {
    pub states: Vec<Vec<T>>,
    pub frequencies: Vec<Vec<T>>,
}

impl<T: Scalar> Probe<T> {
    /// States on the box `[-2, 2]^d`, frequencies on shells of radius 0.1 to 10.
    pub fn default_for(d: usize) -> Self {
        let n = if d == 1 { 9 } else { 5 };
        let states = box_points(&vec![T::lit(-2.0); d], &vec![T::lit(2.0); d], n);
        let radii: Vec<T> = [0.1, 0.5, 1.0, 2.0, 10.0].iter().map(|&r| T::lit(r)).collect();
        let frequencies = frequency_points(d, &radii, check_directions(d));
        Self { states, frequencies }
    }
}

impl<T: Scalar> SymbolModel<T> {
    pub fn from_exponent(name: impl Into<String>, dimension: usize, exponent: LevyExponent<T>) -> Result<Self> {
        check_dimension(dimension)?;
        exponent.validate(dimension)?;
        Ok(Self {
            name: name.into(),
            dimension,
            conservative: true,
            kind: SymbolKind::ClosedForm(ClosedForm::Exponent(exponent)),
        })
    }

    pub fn zero(dimension: usize) -> Self {
        Self::from_family("zero", dimension, ExponentFamily::Zero)
    }

    /// `D|ξ|²`.
    pub fn brownian(dimension: usize, diffusion: T) -> Self {
        Self::from_family("brownian", dimension, ExponentFamily::Brownian { diffusion })
    }

    /// `scale·|ξ|^α`.
    pub fn alpha_stable(dimension: usize, alpha: T, scale: T) -> Self {
        Self::from_family("alpha_stable", dimension, ExponentFamily::AlphaStable { alpha, scale })
    }

    pub fn compound_poisson(dimension: usize, rate: T, jump_std: T) -> Self {
        Self::from_family("compound_poisson", dimension, ExponentFamily::CompoundPoisson { rate, jump_std })
    }

    fn from_family(name: &str, dimension: usize, family: ExponentFamily<T>) -> Self {
        Self::from_exponent(name, dimension, LevyExponent { family, drift: vec![T::zero(); dimension] })
            .expect("valid exponent family")
    }

    /// Adds a drift `b` to an exponent model: `ψ(ξ) − i⟨b, ξ⟩`.
    pub fn with_drift(mut self, drift: Vec<T>) -> Result<Self> {
        match &mut self.kind {
            SymbolKind::ClosedForm(ClosedForm::Exponent(e)) if drift.len() == self.dimension => {
                e.drift = drift;
                Ok(self)
            }
            _ => Err(FellerError::config("drift can only be added to exponent models of matching dimension")),
        }
    }

    /// Closed form given by expressions over `x` and `ξ`.
    pub fn expression(
        name: impl Into<String>,
        dimension: usize,
        re: Expr,
        im: Option<Expr>,
        conservative: bool,
    ) -> Result<Self> {
        check_dimension(dimension)?;
        let allowed = [VarKind::State, VarKind::Frequency];
        re.check(dimension, &allowed)?;
        if let Some(im) = &im {
            im.check(dimension, &allowed)?;
        }
        Ok(Self {
            name: name.into(),
            dimension,
            conservative,
            kind: SymbolKind::ClosedForm(ClosedForm::Expression { re, im }),
        })
    }

    pub fn levy(name: impl Into<String>, chars: LevyCharacteristics<T>) -> Self {
        Self {
            name: name.into(),
            dimension: chars.dimension(),
            conservative: chars.is_conservative(),
            kind: SymbolKind::LevyCharacteristics(chars),
        }
    }

    pub fn stable_like(name: impl Into<String>, spec: StableLikeSpec<T>) -> Self {
        Self { name: name.into(), dimension: spec.dimension(), conservative: true, kind: SymbolKind::StableLike(spec) }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    pub fn kind(&self) -> &SymbolKind<T> {
        &self.kind
    }

    pub fn kind_tag(&self) -> KindTag {
        match self.kind {
            SymbolKind::ClosedForm(_) => KindTag::ClosedForm,
            SymbolKind::LevyCharacteristics(_) => KindTag::LevyCharacteristics,
            SymbolKind::StableLike(_) => KindTag::StableLike,
            SymbolKind::Subordinated { .. } => KindTag::Subordinated,
            SymbolKind::Symmetrized(_) => KindTag::Symmetrized,
        }
    }

    /// The exponent when the model is an exactly samplable Lévy exponent.
    pub fn exponent(&self) -> Option<&LevyExponent<T>> {
        match &self.kind {
            SymbolKind::ClosedForm(ClosedForm::Exponent(e)) => Some(e),
            _ => None,
        }
    }

    pub fn stable_like_spec(&self) -> Option<&StableLikeSpec<T>> {
        match &self.kind {
            SymbolKind::StableLike(s) => Some(s),
            _ => None,
        }
    }

    pub fn depends_on_state(&self) -> bool {
        match &self.kind {
            SymbolKind::ClosedForm(ClosedForm::Exponent(_)) => false,
            SymbolKind::ClosedForm(ClosedForm::Expression { re, im }) => {
                re.depends_on_state() || im.as_ref().is_some_and(Expr::depends_on_state)
            }
            SymbolKind::LevyCharacteristics(c) => c.depends_on_state(),
            SymbolKind::StableLike(s) => !s.is_constant(),
            SymbolKind::Subordinated { base, bernstein } => base.depends_on_state() || bernstein.f.depends_on_state(),
            SymbolKind::Symmetrized(inner) => inner.depends_on_state(),
        }
    }

    /// The symbol is real by construction.
    pub fn is_structurally_real(&self) -> bool {
        match &self.kind {
            SymbolKind::ClosedForm(ClosedForm::Exponent(e)) => e.drift.iter().all(|&b| b == T::zero()),
            SymbolKind::ClosedForm(ClosedForm::Expression { im, .. }) => im.is_none(),
            SymbolKind::LevyCharacteristics(c) => c.is_structurally_real(),
            SymbolKind::StableLike(_) | SymbolKind::Subordinated { .. } | SymbolKind::Symmetrized(_) => true,
        }
    }

    /// Quadrature settings when evaluation involves numerical integration.
    pub fn quadrature(&self) -> Option<QuadOptions<T>> {
        match &self.kind {
            SymbolKind::LevyCharacteristics(c) => Some(c.quad),
            SymbolKind::Subordinated { base, .. } => base.quadrature(),
            SymbolKind::Symmetrized(inner) => inner.quadrature(),
            _ => None,
        }
    }

    /// Admissible evaluation error at a value of size `v`: zero for closed forms.
    pub fn tolerance(&self, v: T) -> T {
        self.quadrature().map_or(T::zero(), |q| T::lit(10.0) * q.abs_tol.max(q.rel_tol * v.abs()))
    }

    /// `p(x, ξ)`.
    pub fn eval(&self, x: &[T], xi: &[T]) -> Result<Complex<T>> {
        if x.len() != self.dimension || xi.len() != self.dimension {
            return Err(FellerError::domain(format!(
                "point dimensions ({}, {}) do not match model dimension {}",
                x.len(),
                xi.len(),
                self.dimension
            )));
        }
        self.eval_unchecked(x, xi)
    }

    fn eval_unchecked(&self, x: &[T], xi: &[T]) -> Result<Complex<T>> {
        Ok(match &self.kind {
            SymbolKind::ClosedForm(ClosedForm::Exponent(e)) => e.eval(xi),
            SymbolKind::ClosedForm(ClosedForm::Expression { re, im }) => {
                let b = Bindings::symbol(x, xi);
                Complex::new(re.eval(&b), im.as_ref().map_or(T::zero(), |e| e.eval(&b)))
            }
            SymbolKind::LevyCharacteristics(c) => c.eval(x, xi)?,
            SymbolKind::StableLike(s) => Complex::new(s.eval(x, xi), T::zero()),
            SymbolKind::Subordinated { base, bernstein } => {
                let psi = base.eval_unchecked(x, xi)?.re;
                Complex::new(bernstein.eval(x, psi), T::zero())
            }
            SymbolKind::Symmetrized(inner) => {
                let half: Vec<T> = xi.iter().map(|&c| c * T::lit(0.5)).collect();
                Complex::new(T::lit(2.0) * inner.eval_unchecked(x, &half)?.re, T::zero())
            }
        })
    }

    /// `Re p(x, ξ)`.
    pub fn eval_re(&self, x: &[T], xi: &[T]) -> Result<T> {
        Ok(self.eval(x, xi)?.re)
    }

    /// Checks the family invariants and the symbol invariants on `probe`:
    /// `Re p ≥ −tol`, Hermitian symmetry, and `p(x, 0) = 0` when declared.
    pub fn validate(&self, probe: &Probe<T>) -> Result<()> {
        match &self.kind {
            SymbolKind::ClosedForm(ClosedForm::Exponent(e)) => e.validate(self.dimension)?,
            SymbolKind::ClosedForm(ClosedForm::Expression { .. }) => {}
            SymbolKind::LevyCharacteristics(c) => c.validate(&probe.states)?,
            SymbolKind::StableLike(s) => s.validate(&probe.states)?,
            SymbolKind::Subordinated { base, bernstein } => {
                base.validate(probe)?;
                bernstein.validate(&probe.states, &BernsteinSpec::default_arguments())?;
            }
            SymbolKind::Symmetrized(inner) => inner.validate(probe)?,
        }
        let zero = vec![T::zero(); self.dimension];
        for x in &probe.states {
            if self.conservative {
                let p0 = self.eval(x, &zero)?;
                if p0.norm() > self.tolerance(T::zero()) {
                    return Err(FellerError::precondition(format!("p(x, 0) = {p0} ≠ 0 at x = {x:?}")));
                }
            }
            for xi in &probe.frequencies {
                let p = self.eval(x, xi)?;
                let tol = self.tolerance(p.norm());
                if !(p.re >= -tol) {
                    return Err(FellerError::precondition(format!("Re p = {} < 0 at x = {x:?}, ξ = {xi:?}", p.re)));
                }
                let neg: Vec<T> = xi.iter().map(|&c| -c).collect();
                let q = self.eval(x, &neg)?;
                if (q - p.conj()).norm() > tol {
                    return Err(FellerError::precondition(format!(
                        "Hermitian symmetry fails at x = {x:?}, ξ = {xi:?}: {p} vs {q}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `q(x, ξ) = f(x, ψ(x, ξ))` for a real base symbol `ψ` with `ψ(·, 0) = 0`.
pub fn subordinate<T: Scalar>(base: SymbolModel<T>, f: BernsteinSpec<T>) -> Result<SymbolModel<T>> {
    let probe = Probe::default_for(base.dimension);
    let zero = vec![T::zero(); base.dimension];
    for x in &probe.states {
        let p0 = base.eval(x, &zero)?;
        if p0.norm() > base.tolerance(T::zero()) {
            return Err(FellerError::precondition(format!("base symbol ψ(0) = {p0} ≠ 0 at x = {x:?}")));
        }
        for xi in &probe.frequencies {
            let p = base.eval(x, xi)?;
            if p.im.abs() > base.tolerance(p.norm()) {
                return Err(FellerError::precondition(format!(
                    "base symbol has imaginary part {} at x = {x:?}, ξ = {xi:?}",
                    p.im
                )));
            }
        }
    }
    f.validate(&probe.states, &BernsteinSpec::default_arguments())?;
    Ok(SymbolModel {
        name: format!("subordinated({})", base.name),
        dimension: base.dimension,
        conservative: base.conservative && f.vanishes_at_zero,
        kind: SymbolKind::Subordinated { base: Box::new(base), bernstein: f },
    })
}

/// `p^S(x, ξ) = 2·Re p(x, ξ/2)`.
pub fn symmetrize<T: Scalar>(model: SymbolModel<T>) -> SymbolModel<T> {
    SymbolModel {
        name: format!("symmetrized({})", model.name),
        dimension: model.dimension,
        conservative: model.conservative,
        kind: SymbolKind::Symmetrized(Box::new(model)),
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(FellerError::config(format!("dimension {d} not supported (1 ≤ d ≤ 3)")))
    }
}
