//! Globally adaptive 21-point Gauss–Kronrod integration on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Scalar;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_462_140,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkResult<T> {
    pub value: T,
    pub abs_error: T,
    pub converged: bool,
    /// Some integrand value was NaN or infinite.
    pub non_finite: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GkOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Scalar> Default for GkOptions<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(1e-12), rel_tol: T::lit(1e-8), max_intervals: 2000 }
    }
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Scalar> Eq for Segment<T> {}
impl<T: Scalar> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// The 21 Kronrod nodes on `[-1, 1]` in increasing order, with their weights.
pub fn nodes_and_weights() -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(21);
    let mut w = Vec::with_capacity(21);
    for j in 0..10 {
        x.push(-XGK[j]);
        w.push(WGK[j]);
    }
    x.push(0.0);
    w.push(WGK[10]);
    for j in (0..10).rev() {
        x.push(XGK[j]);
        w.push(WGK[j]);
    }
    (x, w)
}

/// Single 21-point rule on `[a, b]`; returns (Kronrod value, error estimate, non-finite flag).
pub fn gk21<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T, bool) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let abs_half = half_len.abs();

    let fc = f(center);
    let mut non_finite = !fc.is_finite();
    let mut res_k = fc * T::lit(WGK[10]);
    let mut res_g = T::zero();
    let mut res_abs = fc.abs() * T::lit(WGK[10]);
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        non_finite |= !f1.is_finite() || !f2.is_finite();
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k += w * (f1 + f2);
        res_abs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[10]) * (fc - mean).abs();
    for j in 0..10 {
        res_asc += T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half_len;
    res_abs = res_abs * abs_half;
    res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = if scale < T::one() { res_asc * scale } else { res_asc };
    }
    let eps = T::epsilon();
    if res_abs > T::min_positive_value() / (T::lit(50.0) * eps) {
        err = err.max(T::lit(50.0) * eps * res_abs);
    }
    (value, err, non_finite)
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, opts: &GkOptions<T>) -> GkResult<T> {
    if a == b {
        return GkResult { value: T::zero(), abs_error: T::zero(), converged: true, non_finite: false, evaluations: 0 };
    }
    let (v, e, nf) = gk21(f, a, b);
    let mut evaluations = 21;
    let mut non_finite = nf;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut intervals = 1;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target || non_finite {
            break;
        }
        if intervals >= opts.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = T::lit(0.5) * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Interval can no longer be split in this precision.
            heap.push(worst);
            break;
        }
        let (v1, e1, n1) = gk21(f, worst.a, mid);
        let (v2, e2, n2) = gk21(f, mid, worst.b);
        evaluations += 42;
        non_finite |= n1 || n2;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        intervals += 1;
    }
    // Re-sum to remove drift from the incremental updates.
    let (value, abs_error) = heap.iter().fold((T::zero(), T::zero()), |(v, e), s| (v + s.value, e + s.error));
    let target = opts.abs_tol.max(opts.rel_tol * value.abs());
    GkResult { value, abs_error, converged: abs_error <= target && !non_finite, non_finite, evaluations }
}
