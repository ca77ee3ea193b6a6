//! Envelopes of a symbol over the state variable.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};
use crate::expr::{Bindings, Expr, VarKind};
use crate::grid::box_points;
use crate::quadrature::direction_set;
use crate::scalar::{norm, Scalar};
use crate::symbol::SymbolModel;

/// How the symbol behaves outside the sampled state box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBehavior {
    /// The box covers a full period in every coordinate.
    Periodic,
    /// The symbol is constant in `x` outside the box.
    ConstantAtInfinity,
    /// Envelopes are supplied in closed form.
    UserEnvelope,
}

/// User-supplied closed-form envelopes, expressions in `ξ`.
#[derive(Debug, Clone)]
pub struct UserEnvelope {
    pub q_inf: Expr,
    pub q_sup: Expr,
    pub im_sup: Option<Expr>,
    pub re_sup: Option<Expr>,
}

#[derive(Debug, Clone)]
pub struct StateDomain<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub tail: Option<TailBehavior>,
    pub user: Option<UserEnvelope>,
}

impl<T: Scalar> StateDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, tail: Option<TailBehavior>) -> Self {
        Self { lower, upper, tail, user: None }
    }

    /// The box `[-π, π]^d` flagged periodic.
    pub fn periodic(d: usize) -> Self {
        Self::new(vec![-T::PI(); d], vec![T::PI(); d], Some(TailBehavior::Periodic))
    }

    pub fn with_user_envelope(mut self, user: UserEnvelope) -> Self {
        self.tail = Some(TailBehavior::UserEnvelope);
        self.user = Some(user);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Closed-form envelope of a stable-like symbol.
    ClosedForm,
    /// The symbol does not depend on the state.
    Exact,
    /// User-supplied envelope expressions.
    User,
    Grid { lower: Vec<f64>, upper: Vec<f64>, resolution: usize, tail: TailBehavior },
}

/// Envelope values at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeValues<T> {
    /// `inf_z Re p(z, ξ)`
    pub q_inf: T,
    /// `sup_z |p(z, ξ)|`
    pub q_sup: T,
    /// `sup_z |Im p(z, ξ)|`
    pub im_sup: T,
    /// `sup_z Re p(z, ξ)`
    pub re_sup: T,
}

#[derive(Debug)]
enum Source<T> {
    StableLike { lower: T, upper: T },
    Exact,
    User(UserEnvelope),
    Grid { points: Vec<Vec<T>>, lower: Vec<T>, upper: Vec<T>, spacing: Vec<T> },
}

const CACHE_LIMIT: usize = 1 << 16;

/// Lower and upper envelopes `ξ ↦ inf_z Re p(z, ξ)` etc. of a symbol.
///
/// Grid envelopes memoise their values per frequency.
#[derive(Debug, Clone)]
pub struct Envelope<T> {
    model: Arc<SymbolModel<T>>,
    source: Arc<Source<T>>,
    provenance: Provenance,
    radial: bool,
    cache: Arc<RwLock<HashMap<Vec<u64>, EnvelopeValues<T>>>>,
}

/// Which construction [`build_envelope_with`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMethod {
    /// Closed form for stable-like models, exact for state-independent ones, grid otherwise.
    Auto,
    Grid,
}

/// Builds the envelope with [`EnvelopeMethod::Auto`].
pub fn build_envelope<T: Scalar>(
    model: &SymbolModel<T>,
    domain: &StateDomain<T>,
    resolution: usize,
) -> Result<Envelope<T>> {
    build_envelope_with(model, domain, resolution, EnvelopeMethod::Auto)
}

pub fn build_envelope_with<T: Scalar>(
    model: &SymbolModel<T>,
    domain: &StateDomain<T>,
    resolution: usize,
    method: EnvelopeMethod,
) -> Result<Envelope<T>> {
    let d = model.dimension();
    let model_arc = Arc::new(model.clone());
    let make = |source: Source<T>, provenance: Provenance, radial: bool| Envelope {
        model: model_arc.clone(),
        source: Arc::new(source),
        provenance,
        radial,
        cache: Arc::new(RwLock::new(HashMap::new())),
    };
    if let Some(user) = &domain.user {
        for e in [Some(&user.q_inf), Some(&user.q_sup), user.im_sup.as_ref(), user.re_sup.as_ref()].into_iter().flatten() {
            e.check(d, &[VarKind::Frequency])?;
        }
        let radial = [Some(&user.q_inf), Some(&user.q_sup), user.im_sup.as_ref(), user.re_sup.as_ref()]
            .into_iter()
            .flatten()
            .all(|e| !e.variables().iter().any(|v| matches!(v, crate::expr::Var::Xi(_))));
        return Ok(make(Source::User(user.clone()), Provenance::User, radial));
    }
    if method == EnvelopeMethod::Auto {
        if let Some(spec) = model.stable_like_spec() {
            return Ok(make(Source::StableLike { lower: spec.lower, upper: spec.upper }, Provenance::ClosedForm, true));
        }
        if !model.depends_on_state() {
            let radial = model.exponent().is_some();
            return Ok(make(Source::Exact, Provenance::Exact, radial));
        }
    }
    let Some(tail) = domain.tail else {
        return Err(FellerError::config(
            "state-dependent symbol needs a tail behaviour flag (periodic, constant_at_infinity or user_envelope)",
        ));
    };
    if tail == TailBehavior::UserEnvelope {
        return Err(FellerError::config("tail flag user_envelope requires envelope expressions"));
    }
    if domain.lower.len() != d || domain.upper.len() != d {
        return Err(FellerError::config("state box dimension does not match the model"));
    }
    if domain.lower.iter().zip(&domain.upper).any(|(a, b)| !(a < b)) {
        return Err(FellerError::config("state box must have lower < upper in every coordinate"));
    }
    if resolution < 3 {
        return Err(FellerError::config("envelope resolution must be at least 3"));
    }
    let points = box_points(&domain.lower, &domain.upper, resolution);
    let spacing = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(&a, &b)| (b - a) / T::from_usize_lossy(resolution - 1))
        .collect();
    let provenance = Provenance::Grid {
        lower: domain.lower.iter().map(|v| v.to_f64_lossy()).collect(),
        upper: domain.upper.iter().map(|v| v.to_f64_lossy()).collect(),
        resolution,
        tail,
    };
    let radial = model.stable_like_spec().is_some();
    Ok(make(
        Source::Grid { points, lower: domain.lower.clone(), upper: domain.upper.clone(), spacing },
        provenance,
        radial,
    ))
}

impl<T: Scalar> Envelope<T> {
    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    pub fn model(&self) -> &SymbolModel<T> {
        &self.model
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Grid envelopes over-estimate the infimum over all of R^d.
    pub fn is_grid(&self) -> bool {
        matches!(self.provenance, Provenance::Grid { .. })
    }

    /// The real parts of the envelopes depend on `ξ` only through `|ξ|`.
    pub fn is_radial(&self) -> bool {
        self.radial
    }

    /// Directions over which non-radial envelopes are averaged or minimised:
    /// 64 angles in d=2 and 1024 lattice points in d=3.
    pub fn directions(&self) -> Vec<Vec<T>> {
        let d = self.dimension();
        if self.radial && d > 1 {
            let mut e = vec![T::zero(); d];
            e[0] = T::one();
            return vec![e];
        }
        match d {
            1 => direction_set(1, 2),
            2 => direction_set(2, 64),
            _ => direction_set(d, 1 << 10),
        }
    }

    pub fn q_inf(&self, xi: &[T]) -> Result<T> {
        Ok(self.at(xi)?.q_inf)
    }

    pub fn q_sup(&self, xi: &[T]) -> Result<T> {
        Ok(self.at(xi)?.q_sup)
    }

    /// All four envelope values at `ξ`.
    pub fn at(&self, xi: &[T]) -> Result<EnvelopeValues<T>> {
        if xi.len() != self.dimension() {
            return Err(FellerError::domain("frequency dimension does not match the envelope"));
        }
        match &*self.source {
            Source::StableLike { lower, upper } => Ok(stable_like_values(norm(xi), *lower, *upper)),
            Source::Exact => {
                let p = self.model.eval(&vec![T::zero(); xi.len()], xi)?;
                Ok(EnvelopeValues { q_inf: p.re, q_sup: p.norm(), im_sup: p.im.abs(), re_sup: p.re })
            }
            Source::User(u) => {
                let b = Bindings::symbol(&[], xi);
                let q_inf = u.q_inf.eval(&b);
                let q_sup = u.q_sup.eval(&b);
                Ok(EnvelopeValues {
                    q_inf,
                    q_sup,
                    im_sup: u.im_sup.as_ref().map_or(T::zero(), |e| e.eval(&b)),
                    re_sup: u.re_sup.as_ref().map_or(q_sup, |e| e.eval(&b)),
                })
            }
            Source::Grid { points, lower, upper, spacing } => {
                let key: Vec<u64> = xi.iter().map(|v| v.to_f64_lossy().to_bits()).collect();
                if let Some(v) = self.cache.read().expect("envelope cache").get(&key) {
                    return Ok(*v);
                }
                let v = grid_values(&self.model, xi, points, lower, upper, spacing)?;
                let mut cache = self.cache.write().expect("envelope cache");
                if cache.len() < CACHE_LIMIT {
                    cache.insert(key, v);
                }
                Ok(v)
            }
        }
    }

    /// Envelope values at many frequencies, computed in parallel.
    pub fn tabulate(&self, xis: &[Vec<T>]) -> Result<Vec<EnvelopeValues<T>>> {
        xis.par_iter().map(|xi| self.at(xi)).collect()
    }

    /// `min_u q_inf(r·u)` over the direction set.
    pub fn q_inf_min_on_sphere(&self, r: T) -> Result<T> {
        let mut best = T::infinity();
        for u in self.directions() {
            let xi: Vec<T> = u.iter().map(|&c| c * r).collect();
            best = best.min(self.q_inf(&xi)?);
        }
        Ok(best)
    }

    /// `sup_{|η| ≤ ρ} q_sup(η)` sampled on 16 radii and the direction set.
    pub fn q_sup_on_ball(&self, rho: T) -> Result<T> {
        if let Source::StableLike { lower, upper } = &*self.source {
            return Ok(stable_like_values(rho, *lower, *upper).q_sup);
        }
        let mut best = T::zero();
        for j in 1..=16 {
            let r = rho * T::from_usize_lossy(j) / T::lit(16.0);
            for u in self.directions() {
                let xi: Vec<T> = u.iter().map(|&c| c * r).collect();
                best = best.max(self.q_sup(&xi)?);
            }
        }
        Ok(best)
    }
}

/// `q_inf = |ξ|^{ᾱ}, q_sup = |ξ|^{α̲}` for `|ξ| ≤ 1`, reversed for `|ξ| > 1`.
fn stable_like_values<T: Scalar>(r: T, lower: T, upper: T) -> EnvelopeValues<T> {
    if r == T::zero() {
        return EnvelopeValues { q_inf: T::zero(), q_sup: T::zero(), im_sup: T::zero(), re_sup: T::zero() };
    }
    let (a_inf, a_sup) = if r <= T::one() { (upper, lower) } else { (lower, upper) };
    let q_sup = r.powf(a_sup);
    EnvelopeValues { q_inf: r.powf(a_inf), q_sup, im_sup: T::zero(), re_sup: q_sup }
}

/// Grid scan followed by three rounds of coordinatewise golden-section refinement
/// around each extremiser.
fn grid_values<T: Scalar>(
    model: &SymbolModel<T>,
    xi: &[T],
    points: &[Vec<T>],
    lower: &[T],
    upper: &[T],
    spacing: &[T],
) -> Result<EnvelopeValues<T>> {
    let mut vals = Vec::with_capacity(points.len());
    for x in points {
        vals.push(model.eval(x, xi)?);
    }
    let argbest = |key: &dyn Fn(&num_complex::Complex<T>) -> T| -> usize {
        let mut best = 0;
        for (k, v) in vals.iter().enumerate() {
            if key(v) > key(&vals[best]) {
                best = k;
            }
        }
        best
    };
    let neg_re = |p: &num_complex::Complex<T>| -p.re;
    let re = |p: &num_complex::Complex<T>| p.re;
    let modulus = |p: &num_complex::Complex<T>| p.norm();
    let im_abs = |p: &num_complex::Complex<T>| p.im.abs();

    // Each refinement maximises `key` starting from the best grid point.
    let refine = |key: &dyn Fn(&num_complex::Complex<T>) -> T, start: usize| -> Result<T> {
        let mut x = points[start].clone();
        let mut best = key(&vals[start]);
        for _round in 0..3 {
            for j in 0..x.len() {
                let a = (x[j] - spacing[j]).max(lower[j]);
                let b = (x[j] + spacing[j]).min(upper[j]);
                let mut probe = x.clone();
                let mut f = |t: T| -> Result<T> {
                    probe[j] = t;
                    Ok(key(&model.eval(&probe, xi)?))
                };
                let (t, v) = golden_max(&mut f, a, b)?;
                if v > best {
                    best = v;
                    x[j] = t;
                }
            }
            if x.len() == 1 {
                break;
            }
        }
        Ok(best)
    };
    let q_inf = -refine(&neg_re, argbest(&neg_re))?;
    let re_sup = refine(&re, argbest(&re))?;
    let q_sup = refine(&modulus, argbest(&modulus))?;
    let im_sup = refine(&im_abs, argbest(&im_abs))?;
    Ok(EnvelopeValues { q_inf, q_sup: q_sup.max(re_sup.abs()).max(im_sup), im_sup, re_sup })
}

/// Golden-section search for the maximum of `f` on `[a, b]`; returns the best point seen.
fn golden_max<T: Scalar>(f: &mut dyn FnMut(T) -> Result<T>, mut a: T, mut b: T) -> Result<(T, T)> {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let (mut best_t, mut best_v) = if fc >= fd { (c, fc) } else { (d, fd) };
    let tol = T::lit(1e-12) * (T::one() + a.abs().max(b.abs()));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
            if fc > best_v {
                best_t = c;
                best_v = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
            if fd > best_v {
                best_t = d;
                best_v = fd;
            }
        }
    }
    Ok((best_t, best_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{StableLikeSpec, StateFn};

    fn stable_like() -> SymbolModel<f64> {
        let alpha = StateFn::from_expr(Expr::parse("1.5 + 0.3*sin(x)").unwrap());
        SymbolModel::stable_like("s", StableLikeSpec::new(1, alpha, 1.2, 1.8, true).unwrap())
    }

    #[test]
    fn closed_form_examples() {
        let env = build_envelope(&stable_like(), &StateDomain::periodic(1), 64).unwrap();
        assert_eq!(env.provenance(), &Provenance::ClosedForm);
        assert!((env.q_inf(&[4.0]).unwrap() - 4f64.powf(1.2)).abs() < 1e-12);
        assert!((env.q_inf(&[-0.5]).unwrap() - 0.5f64.powf(1.8)).abs() < 1e-12);
        assert!((env.q_inf(&[4.0]).unwrap() - 5.278).abs() < 1e-3);
        assert!((env.q_inf(&[0.5]).unwrap() - 0.2872).abs() < 1e-4);
    }

    #[test]
    fn grid_matches_closed_form() {
        let m = stable_like();
        let grid = build_envelope_with(&m, &StateDomain::periodic(1), 64, EnvelopeMethod::Grid).unwrap();
        let closed = build_envelope(&m, &StateDomain::periodic(1), 64).unwrap();
        for &r in &[0.01, 0.3, 0.999, 1.0, 2.0, 4.0, 57.0, 100.0] {
            let g = grid.at(&[r]).unwrap();
            let c = closed.at(&[r]).unwrap();
            assert!((g.q_inf - c.q_inf).abs() < 1e-6, "r={r}: {} vs {}", g.q_inf, c.q_inf);
            assert!((g.q_sup - c.q_sup).abs() < 1e-6 * c.q_sup.max(1.0));
        }
    }

    #[test]
    fn state_independent_is_exact() {
        let m = SymbolModel::brownian(1, 1.0f64).with_drift(vec![2.0]).unwrap();
        let env = build_envelope(&m, &StateDomain::new(vec![], vec![], None), 3).unwrap();
        let v = env.at(&[1.5]).unwrap();
        assert_eq!(v.q_inf, 2.25);
        assert_eq!(v.im_sup, 3.0);
        assert_eq!(env.provenance(), &Provenance::Exact);
    }

    #[test]
    fn missing_tail_flag_is_a_config_error() {
        let m = SymbolModel::expression("e", 1, Expr::parse("(2 + sin(x))*xi^2").unwrap(), None, true).unwrap();
        let r = build_envelope(&m, &StateDomain::new(vec![-1.0], vec![1.0], None), 16);
        assert!(matches!(r, Err(FellerError::Config(_))));
    }

    #[test]
    fn grid_envelope_of_expression() {
        let m = SymbolModel::expression("e", 1, Expr::parse("(2 + sin(x))*xi^2").unwrap(), Some(Expr::parse("cos(x)*xi").unwrap()), true)
            .unwrap();
        let env = build_envelope(&m, &StateDomain::periodic(1), 17).unwrap();
        let v = env.at(&[2.0f64]).unwrap();
        assert!((v.q_inf - 4.0).abs() < 1e-9);
        assert!((v.re_sup - 12.0).abs() < 1e-9);
        assert!((v.im_sup - 2.0).abs() < 1e-9);
        assert!(v.q_sup >= v.re_sup);
    }

    #[test]
    fn user_envelope() {
        let m = SymbolModel::expression("e", 1, Expr::parse("(2 + sin(x))*xi^2").unwrap(), None, true).unwrap();
        let user = UserEnvelope {
            q_inf: Expr::parse("norm_xi^2").unwrap(),
            q_sup: Expr::parse("3*norm_xi^2").unwrap(),
            im_sup: None,
            re_sup: None,
        };
        let dom = StateDomain::new(vec![-1.0], vec![1.0], None).with_user_envelope(user);
        let env = build_envelope(&m, &dom, 3).unwrap();
        assert_eq!(env.q_inf(&[2.0]).unwrap(), 4.0);
        assert_eq!(env.at(&[2.0]).unwrap().re_sup, 12.0);
    }
}
