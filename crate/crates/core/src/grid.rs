//! Sampling grids over state and frequency space.

use crate::quadrature::direction_set;
use crate::scalar::{norm, Scalar};

/// `n` equispaced points on `[a, b]` (both ends included).
pub fn lin_space<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / T::from_usize_lossy(n - 1);
            (0..n).map(|k| if k + 1 == n { b } else { a + step * T::from_usize_lossy(k) }).collect()
        }
    }
}

/// `n` log-equispaced points on `[a, b]`, `0 < a < b`.
pub fn log_space<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    lin_space(a.ln(), b.ln(), n).into_iter().map(T::exp).collect()
}

/// Tensor grid over the box `lower ≤ x ≤ upper` with `n` points per axis.
pub fn box_points<T: Scalar>(lower: &[T], upper: &[T], n: usize) -> Vec<Vec<T>> {
    assert_eq!(lower.len(), upper.len());
    let axes: Vec<Vec<T>> = lower.iter().zip(upper).map(|(&a, &b)| lin_space(a, b, n)).collect();
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// Tensor grid points of the cube `[-r, r]^d` that lie in the closed ball of radius `r`.
pub fn ball_points<T: Scalar>(d: usize, r: T, n: usize) -> Vec<Vec<T>> {
    let lower = vec![-r; d];
    let upper = vec![r; d];
    let slack = r * T::lit(1e-12);
    box_points(&lower, &upper, n).into_iter().filter(|p| norm(p) <= r + slack).collect()
}

/// Frequencies `ρ·u` for every radius `ρ` and every direction `u` of the
/// deterministic direction set with `directions` elements (ignored in d=1).
pub fn frequency_points<T: Scalar>(d: usize, radii: &[T], directions: usize) -> Vec<Vec<T>> {
    let dirs = direction_set::<T>(d, directions);
    radii.iter().flat_map(|&rho| dirs.iter().map(move |u| u.iter().map(|&c| rho * c).collect())).collect()
}

/// Number of directions used when sampling frequency shells for checks.
pub fn check_directions(d: usize) -> usize {
    match d {
        1 => 2,
        2 => 16,
        _ => 32,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaces_hit_endpoints() {
        let v = lin_space(-1.0f64, 1.0, 5);
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let l = log_space(1e-2f64, 1e2, 5);
        assert!((l[2] - 1.0).abs() < 1e-14 && (l[4] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn box_and_ball_counts() {
        assert_eq!(box_points(&[0.0f64, 0.0], &[1.0, 1.0], 3).len(), 9);
        let b = ball_points::<f64>(2, 1.0, 3);
        // corners of the square are outside the disc
        assert_eq!(b.len(), 5);
    }

    #[test]
    fn frequency_shells() {
        let f = frequency_points::<f64>(2, &[1.0, 2.0], 4);
        assert_eq!(f.len(), 8);
        assert!((norm(&f[5]) - 2.0).abs() < 1e-14);
    }
}
