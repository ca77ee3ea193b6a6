//! Random streams and variate generators.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{FellerError, Result};

/// 32-bit words reserved for one step of one path.
const STEP_STRIDE: u128 = 1 << 24;

/// Counter-based stream for `(root seed, stream id)`; every step draws from its
/// own block range so the output is independent of evaluation order.
#[derive(Debug, Clone)]
pub struct PathStream {
    rng: ChaCha8Rng,
}

impl PathStream {
    pub fn new(root_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Positions the stream at the start of `step`'s range and returns the generator.
    pub fn at_step(&mut self, step: u64) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(step as u128 * STEP_STRIDE);
        &mut self.rng
    }
}

/// Standard symmetric α-stable variate, `E e^{iξS} = e^{−|ξ|^α}`, by the
/// Chambers–Mallows–Stuck transform.
pub fn stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let g: f64 = StandardNormal.sample(rng);
        return SQRT_2 * g;
    }
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let a = alpha * v;
    a.sin() / v.cos().powf(1.0 / alpha) * ((v - a).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive `β`-stable variate with `E e^{−λA} = e^{−λ^β}`, `0 < β < 1` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    // U uniform on (0, π); the endpoints have probability zero but are excluded explicitly.
    let u = loop {
        let u = PI * rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let w: f64 = Exp1.sample(rng);
    let num = (beta * u).sin() / u.sin().powf(1.0 / beta);
    num * (((1.0 - beta) * u).sin() / w).powf((1.0 - beta) / beta)
}

/// Rotationally symmetric α-stable vector with `E e^{i⟨ξ,S⟩} = e^{−|ξ|^α}`,
/// written into `out`. In d=1 this is [`stable`]; otherwise `√A·N(0, 2I)`.
pub fn isotropic_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = stable(alpha, rng);
        return;
    }
    let scale = if alpha == 2.0 { 1.0 } else { positive_stable(alpha / 2.0, rng).sqrt() };
    for c in out.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *c = scale * SQRT_2 * g;
    }
}

/// `n` standard symmetric α-stable variates.
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(FellerError::domain(format!("stability index {alpha} outside (0, 2]")));
    }
    Ok((0..n).map(|_| stable(alpha, rng)).collect())
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Poisson count with mean `mean ≥ 0`.
pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn gaussian_case_has_variance_two() {
        let x = sample_stable(2.0, 1_000_000, &mut rng()).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((v - 2.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn cauchy_char_fn() {
        let n = 1_000_000;
        let x = sample_stable(1.0, n, &mut rng()).unwrap();
        let c: Vec<f64> = x.iter().map(|a| a.cos()).collect();
        let m = c.iter().sum::<f64>() / n as f64;
        let s = (c.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
        assert!((m - (-1.0f64).exp()).abs() < 3.0 * s, "{m} ± {s}");
    }

    #[test]
    fn char_fn_for_general_alpha() {
        let n = 400_000;
        for alpha in [0.5, 1.2, 1.8] {
            let x = sample_stable(alpha, n, &mut rng()).unwrap();
            for xi in [0.5, 1.0, 2.0] {
                let c: Vec<f64> = x.iter().map(|a| (a * xi).cos()).collect();
                let m = c.iter().sum::<f64>() / n as f64;
                let s = (c.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
                let exact = (-(xi as f64).powf(alpha)).exp();
                assert!((m - exact).abs() < 4.0 * s, "α={alpha} ξ={xi}: {m} vs {exact}");
            }
        }
    }

    #[test]
    fn median_is_zero_for_heavy_tails() {
        let mut x = sample_stable(0.5, 200_001, &mut rng()).unwrap();
        x.sort_by(f64::total_cmp);
        // Median of n uniforms has std 1/(2√n); the density at 0 is Γ(1+1/α)/π.
        let median = x[100_000];
        let f0 = 2.0 / PI;
        assert!(median.abs() < 3.0 / (2.0 * 200_001f64.sqrt() * f0), "{median}");
    }

    #[test]
    fn isotropic_char_fn_in_3d() {
        let n = 200_000;
        let mut r = rng();
        let mut out = [0.0; 3];
        let xi = [0.3, -0.4, 1.2];
        let mut acc = 0.0;
        for _ in 0..n {
            isotropic_stable(1.5, &mut r, &mut out);
            acc += (out[0] * xi[0] + out[1] * xi[1] + out[2] * xi[2]).cos();
        }
        let exact = (-(1.3f64).powf(1.5)).exp();
        assert!((acc / n as f64 - exact).abs() < 0.01);
    }

    #[test]
    fn streams_are_order_independent() {
        let mut a = PathStream::new(11, 3);
        let mut b = PathStream::new(11, 3);
        let x5 = stable(1.5, a.at_step(5));
        let _ = stable(1.5, b.at_step(0));
        assert_eq!(x5, stable(1.5, b.at_step(5)));
        let other = stable(1.5, PathStream::new(11, 4).at_step(5));
        assert_ne!(x5, other);
    }

    #[test]
    fn invalid_alpha() {
        assert!(sample_stable(0.0, 1, &mut rng()).is_err());
        assert!(sample_stable(2.5, 1, &mut rng()).is_err());
    }
}
