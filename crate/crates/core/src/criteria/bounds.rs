use crate::error::{FellerError, Result};
use crate::scalar::Scalar;

use super::envelope::Envelope;

/// `exp(−(t/16)·q_inf(2ξ))`, the uniform bound on `|λ_t(x, ξ)|`.
pub fn char_fn_bound<T: Scalar>(env: &Envelope<T>, t: T, xi: &[T]) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(FellerError::domain(format!("time {t} must be nonnegative")));
    }
    if t == T::zero() {
        return Ok(T::one());
    }
    let two_xi: Vec<T> = xi.iter().map(|&c| c * T::lit(2.0)).collect();
    Ok((-(t / T::lit(16.0)) * env.q_inf(&two_xi)?).exp())
}

/// `16 / (16 + q_inf(ξ))`, the bound on `E^x|μ̂(ξ)|²` for the occupation measure.
pub fn local_time_fourier_bound<T: Scalar>(env: &Envelope<T>, xi: &[T]) -> Result<T> {
    let sixteen = T::lit(16.0);
    Ok(sixteen / (sixteen + env.q_inf(xi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::envelope::{build_envelope, StateDomain};
    use crate::symbol::SymbolModel;

    fn env(m: SymbolModel<f64>) -> Envelope<f64> {
        build_envelope(&m, &StateDomain::new(vec![], vec![], None), 3).unwrap()
    }

    #[test]
    fn char_fn_examples() {
        let b = env(SymbolModel::brownian(1, 1.0));
        let v = char_fn_bound(&b, 1.0, &[1.0]).unwrap();
        assert!((v - (-0.25f64).exp()).abs() < 1e-15);
        assert!((-1.0f64).exp() <= v);
        assert_eq!(char_fn_bound(&b, 0.0, &[3.0]).unwrap(), 1.0);
        let c = env(SymbolModel::alpha_stable(1, 1.0, 1.0));
        let v = char_fn_bound(&c, 2.0, &[3.0]).unwrap();
        assert!((v - (-0.75f64).exp()).abs() < 1e-15);
        assert!(char_fn_bound(&c, -1.0, &[3.0]).is_err());
    }

    #[test]
    fn local_time_fourier_examples() {
        let b = env(SymbolModel::brownian(1, 1.0));
        assert_eq!(local_time_fourier_bound(&b, &[0.0]).unwrap(), 1.0);
        assert_eq!(local_time_fourier_bound(&b, &[4.0]).unwrap(), 0.5);
    }
}
