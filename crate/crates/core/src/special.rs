//! Gamma function and related constants.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos approximation with reflection below 1/2).
pub fn gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    (T::lit(2.0) * T::PI()).sqrt() * t.powf(x + half) * (-t).exp() * acc
}

/// Surface measure ω_{d−1} = 2π^{d/2}/Γ(d/2) of the unit sphere in R^d.
pub fn sphere_area<T: Scalar>(d: usize) -> T {
    let half_d = T::from_usize_lossy(d) * T::lit(0.5);
    T::lit(2.0) * T::PI().powf(half_d) / gamma(half_d)
}

/// Bessel function `J_0(s) = (1/2π)∫_0^{2π} cos(s·sin θ) dθ`.
///
/// The trapezoid rule with `N` nodes is exact up to `2·J_N(s)`, which is
/// negligible once `N` exceeds `|s|` by a margin.
pub fn bessel_j0<T: Scalar>(s: T) -> T {
    let n = s.abs().to_f64_lossy().ceil() as usize + 40;
    let n = n.max(32);
    let step = T::lit(2.0) * T::PI() / T::from_usize_lossy(n);
    let mut acc = T::zero();
    for k in 0..n {
        acc += (s * (step * T::from_usize_lossy(k)).sin()).cos();
    }
    acc / T::from_usize_lossy(n)
}

/// Spherical average of `cos⟨z, ξ⟩` over `|z| = 1` as a function of `s = |ξ|`:
/// `cos s` in d=1, `J_0(s)` in d=2, `sin(s)/s` in d=3.
pub fn spherical_cosine_mean<T: Scalar>(d: usize, s: T) -> T {
    match d {
        1 => s.cos(),
        2 => bessel_j0(s),
        3 => {
            if s.abs() < T::lit(1e-4) {
                T::one() - s * s / T::lit(6.0)
            } else {
                s.sin() / s
            }
        }
        _ => panic!("spherical cosine mean implemented for d <= 3"),
    }
}

/// `1 − spherical_cosine_mean(d, s)`, accurate for small `s`.
pub fn one_minus_spherical_cosine_mean<T: Scalar>(d: usize, s: T) -> T {
    match d {
        1 => {
            let h = (s * T::lit(0.5)).sin();
            T::lit(2.0) * h * h
        }
        2 if s.abs() < T::one() => {
            // Σ_{k≥1} (−1)^{k+1} (s/2)^{2k} / (k!)²
            let q = s * s * T::lit(0.25);
            let mut term = T::one();
            let mut acc = T::zero();
            for k in 1..20 {
                let kf = T::from_usize_lossy(k);
                term = -term * q / (kf * kf);
                acc -= term;
            }
            acc
        }
        3 if s.abs() < T::lit(0.1) => {
            let s2 = s * s;
            s2 / T::lit(6.0) - s2 * s2 / T::lit(120.0) + s2 * s2 * s2 / T::lit(5040.0)
        }
        _ => T::one() - spherical_cosine_mean(d, s),
    }
}

/// Positive zeros of `spherical_cosine_mean(d, ·)`, indexed from 0.
pub fn spherical_cosine_zero<T: Scalar>(d: usize, k: usize) -> T {
    const J0_ZEROS: [f64; 5] = [
        2.404_825_557_695_773,
        5.520_078_110_286_311,
        8.653_727_912_911_013,
        11.791_534_439_014_281,
        14.930_917_708_487_786,
    ];
    let kf = T::from_usize_lossy(k);
    match d {
        1 => (kf + T::lit(0.5)) * T::PI(),
        2 => {
            if k < J0_ZEROS.len() {
                T::lit(J0_ZEROS[k])
            } else {
                // McMahon expansion
                let b = (kf + T::lit(0.75)) * T::PI();
                let ib = T::one() / (T::lit(8.0) * b);
                b + ib - T::lit(124.0 / 3.0) * ib * ib * ib
            }
        }
        3 => (kf + T::one()) * T::PI(),
        _ => panic!("spherical cosine zeros implemented for d <= 3"),
    }
}
