//! Numerical kernels shared by the rest of the crate.
//!
//! * [`complex_sinc`] for the leaky-wave pattern, which is evaluated at a
//!   complex argument.
//! * Globally adaptive Gauss-Kronrod (10/21 point) quadrature on finite
//!   intervals, plus a `t / (1 - t)` map for `[0, inf)`.
//! * Bisection for monotone decreasing functions.
//! * [`RngStream`], a counter-based ChaCha stream addressed by
//!   `(seed, stream_id)` so Monte Carlo trials can run in any order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature on [{a}, {b}] did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    NonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("bracket [{lo}, {hi}] does not straddle a root: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    BracketViolation {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(&'static str),
}

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Maximum number of bisections applied to any one sub-interval.
    pub max_refinement_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-6,
            absolute_tolerance: 1e-12,
            max_refinement_depth: 30,
        }
    }
}

impl QuadratureSpec {
    pub fn new(
        relative_tolerance: f64,
        absolute_tolerance: f64,
        max_refinement_depth: u32,
    ) -> Result<Self, NumericsError> {
        let spec = Self {
            relative_tolerance,
            absolute_tolerance,
            max_refinement_depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.relative_tolerance > 0.0) {
            return Err(NumericsError::InvalidSpec("relative_tolerance must be > 0"));
        }
        if !(self.absolute_tolerance >= 0.0) {
            return Err(NumericsError::InvalidSpec(
                "absolute_tolerance must be >= 0",
            ));
        }
        if self.max_refinement_depth < 1 {
            return Err(NumericsError::InvalidSpec(
                "max_refinement_depth must be >= 1",
            ));
        }
        Ok(())
    }

    /// Same depth, tighter or looser tolerances; used for inner integrals.
    pub fn with_tolerances(self, relative_tolerance: f64, absolute_tolerance: f64) -> Self {
        Self {
            relative_tolerance,
            absolute_tolerance,
            ..self
        }
    }
}

const SINC_SERIES_RADIUS: f64 = 1e-4;

/// `sin(z) / z` for complex `z = z_real + i z_imag`, returned as `(re, im)`.
pub fn complex_sinc(z_real: f64, z_imag: f64) -> (f64, f64) {
    let s = complex_sinc_c(Complex64::new(z_real, z_imag));
    (s.re, s.im)
}

pub(crate) fn complex_sinc_c(z: Complex64) -> Complex64 {
    if z.norm() < SINC_SERIES_RADIUS {
        let z2 = z * z;
        // 1 - z^2/6 + z^4/120
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

// QUADPACK qk21 abscissae and weights.
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Nodes and weights of the 21-point Kronrod rule mapped onto `[a, b]`.
pub(crate) fn kronrod_rule(a: f64, b: f64) -> [(f64, f64); 21] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(center, WGK[10] * half); 21];
    for j in 0..10 {
        let dx = half * XGK[j];
        out[2 * j] = (center - dx, WGK[j] * half);
        out[2 * j + 1] = (center + dx, WGK[j] * half);
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_21<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    depth: u32,
) -> Result<Panel, NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, NumericsError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFinite { x })
        }
    };

    let fc = eval(center)?;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut res_abs = WGK[10] * fc.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = kronrod * half;
    res_abs *= scale;
    res_asc *= scale;

    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        depth,
    })
}

/// Upper bound on the number of live panels, independent of depth.
const MAX_PANELS: usize = 4096;

/// Adaptive quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error meets `max(absolute_tolerance, relative_tolerance * |I|)`.
pub fn integrate_finite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }

    let first = gauss_kronrod_21(&mut f, a, b, 0)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        let tol = spec
            .absolute_tolerance
            .max(spec.relative_tolerance * total.abs());
        if total_err <= tol {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        if worst.depth >= spec.max_refinement_depth || heap.len() + 2 > MAX_PANELS {
            return Err(NumericsError::NonConvergence {
                a,
                b,
                estimate: total,
                error: total_err,
                intervals: heap.len() + 1,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gauss_kronrod_21(&mut f, worst.a, mid, worst.depth + 1)?;
        let right = gauss_kronrod_21(&mut f, mid, worst.b, worst.depth + 1)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from the panels so the running update's drift never leaks out.
    let panels = heap.into_sorted_vec();
    Ok(pairwise_sum_by(&panels, |p| p.value))
}

/// Integrate over consecutive intervals `[p0, p1], [p1, p2], ...`.
///
/// Breakpoints must be sorted; duplicates are skipped. Each piece gets the
/// full tolerance of `spec`.
pub fn integrate_piecewise<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    let mut sum = 0.0;
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            sum += integrate_finite(&mut f, w[0], w[1], spec)?;
        } else if w[1] < w[0] {
            return Err(NumericsError::InvalidInterval { a: w[0], b: w[1] });
        }
    }
    Ok(sum)
}

/// `int_0^inf f(s) ds` through `s = scale * t / (1 - t)`, `t` in `(0, 1)`.
///
/// `scale` should sit near where the integrand's mass is; the Gauss nodes
/// never touch `t = 1`, so `f` is only evaluated at finite `s`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(NumericsError::InvalidSpec(
            "semi-infinite scale must be positive and finite",
        ));
    }
    integrate_finite(
        |t| {
            let one_minus = 1.0 - t;
            let s = scale * t / one_minus;
            if !s.is_finite() {
                return 0.0;
            }
            let jac = scale / (one_minus * one_minus);
            let v = f(s);
            // f decays faster than the Jacobian grows wherever the integral
            // exists, but 0 * inf must not leak out as NaN.
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        spec,
    )
}

/// Root of a decreasing function with `g(lo) > 0 > g(hi)`.
///
/// Stops once the bracket is no wider than `tol`, and returns its midpoint.
pub fn bisect_decreasing<G: FnMut(f64) -> f64>(
    mut g: G,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let g_lo = g(lo);
    let g_hi = g(hi);
    if !(lo < hi) || !(g_lo > 0.0) || !(g_hi < 0.0) {
        return Err(NumericsError::BracketViolation { lo, hi, g_lo, g_hi });
    }
    let (mut a, mut b) = (lo, hi);
    // 2^200 covers any f64 bracket down to its ulp; the loop normally exits on tol.
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm > 0.0 {
            a = mid;
        } else if gm < 0.0 {
            b = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (a + b))
}

/// Pairwise (cascade) summation. Deterministic for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values, |v| *v)
}

fn pairwise_sum_by<T, F: Fn(&T) -> f64 + Copy>(values: &[T], key: F) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        values.iter().map(key).sum()
    } else {
        let (l, r) = values.split_at(values.len() / 2);
        pairwise_sum_by(l, key) + pairwise_sum_by(r, key)
    }
}

/// Independent random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id in the cipher's nonce, so draws are
/// bit-identical across runs and platforms and no two ids overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn tight() -> QuadratureSpec {
        QuadratureSpec::new(1e-12, 0.0, 40).unwrap()
    }

    #[test]
    fn sinc_at_origin_is_one() {
        assert_eq!(complex_sinc(0.0, 0.0), (1.0, 0.0));
    }

    #[test]
    fn sinc_zero_at_pi() {
        let (re, im) = complex_sinc(PI, 0.0);
        assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
    }

    #[test]
    fn sinc_on_imaginary_axis() {
        // sinc(jx) = sinh(x)/x; oracle is the Taylor series of sinh(x)/x to 20 terms.
        let x: f64 = 0.5;
        let mut series = 0.0;
        let mut term = 1.0;
        for k in 0..20 {
            series += term;
            let n = 2.0 * k as f64;
            term *= x * x / ((n + 2.0) * (n + 3.0));
        }
        let (re, im) = complex_sinc(0.0, x);
        assert_relative_eq!(re, series, max_relative = 1e-14);
        assert!(im.abs() < 1e-15);
        assert_relative_eq!(re, 1.042_190_610_987_494_7, max_relative = 1e-14);
    }

    #[test]
    fn sinc_branches_agree_at_seam() {
        for &(re, im) in &[(1e-4, 0.0), (0.0, 1e-4), (7.0e-5, 7.0e-5), (-1e-4, 0.0)] {
            let z = Complex64::new(re, im);
            let series = {
                let z2 = z * z;
                Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
            };
            let direct = z.sin() / z;
            assert!((series - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn integrate_constants_and_polynomials() {
        let spec = QuadratureSpec::default();
        assert_relative_eq!(
            integrate_finite(|_| 1.0, 0.0, 1.0, &spec).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            integrate_finite(|x| x * x, 0.0, 3.0, &spec).unwrap(),
            9.0,
            max_relative = 1e-14
        );
        // Kronrod 21 integrates degree <= 31 exactly.
        let p = |x: f64| x.powi(29) - 3.0 * x.powi(17) + 2.0;
        let exact = 2f64.powi(30) / 30.0 - 3.0 * 2f64.powi(18) / 18.0 + 4.0;
        assert_relative_eq!(
            integrate_finite(p, 0.0, 2.0, &spec).unwrap(),
            exact,
            max_relative = 1e-13
        );
    }

    #[test]
    fn integrate_exponential() {
        let v = integrate_finite(|x| (-x).exp(), 0.0, 10.0, &tight()).unwrap();
        assert_relative_eq!(v, 1.0 - (-10.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn empty_interval_and_bad_bounds() {
        let spec = QuadratureSpec::default();
        assert_eq!(integrate_finite(|x| x, 2.0, 2.0, &spec).unwrap(), 0.0);
        assert!(matches!(
            integrate_finite(|x| x, 2.0, 1.0, &spec),
            Err(NumericsError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn reports_non_convergence() {
        // 1/sqrt(x) has an integrable singularity the rule cannot resolve at depth 3.
        let spec = QuadratureSpec::new(1e-12, 0.0, 3).unwrap();
        let r = integrate_finite(
            |x: f64| 1.0 / x.max(1e-300).sqrt() * (50.0 * x).sin(),
            0.0,
            1.0,
            &spec,
        );
        assert!(matches!(r, Err(NumericsError::NonConvergence { .. })));
    }

    #[test]
    fn rejects_non_finite_integrand() {
        let r = integrate_finite(
            |x| if x > 0.5 { f64::NAN } else { x },
            0.0,
            1.0,
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(NumericsError::NonFinite { .. })));
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(QuadratureSpec::new(0.0, 0.0, 5).is_err());
        assert!(QuadratureSpec::new(1e-6, -1.0, 5).is_err());
        assert!(QuadratureSpec::new(1e-6, 0.0, 0).is_err());
    }

    #[test]
    fn semi_infinite_closed_forms() {
        let spec = tight();
        assert_relative_eq!(
            integrate_semi_infinite(|s| (-s).exp(), 1.0, &spec).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            integrate_semi_infinite(|s| s * (-s).exp(), 1.0, &spec).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            integrate_semi_infinite(|s| (-s * s).exp(), 1.0, &spec).unwrap(),
            PI.sqrt() / 2.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn semi_infinite_is_scale_invariant() {
        // int_0^inf (1/s)(1 - e^{-sX}) e^{-s n} ds = ln(1 + X/n)
        let (x, n) = (3.5e-23, 1.58e-20);
        let f = |s: f64| -(-s * x).exp_m1() / s * (-s * n).exp();
        let spec = QuadratureSpec::new(1e-11, 0.0, 50).unwrap();
        let base = integrate_semi_infinite(f, 1.0 / x, &spec).unwrap();
        assert_relative_eq!(base, (x / n).ln_1p(), max_relative = 1e-9);
        for k in [0.5, 2.0] {
            let v = integrate_semi_infinite(f, k / x, &spec).unwrap();
            assert_relative_eq!(v, base, max_relative = 1e-8);
        }
    }

    #[test]
    fn bisection_roots() {
        assert_relative_eq!(
            bisect_decreasing(|x| 1.0 - x, 0.0, 2.0, 1e-10).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            bisect_decreasing(|x: f64| (-x).exp() - 0.5, 0.0, 5.0, 1e-12).unwrap(),
            2f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            bisect_decreasing(|x| 2.0 - x * x, 0.0, 5.0, 1e-12).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bisection_rejects_bad_bracket() {
        assert!(matches!(
            bisect_decreasing(|x| x - 1.0, 0.0, 2.0, 1e-9),
            Err(NumericsError::BracketViolation { .. })
        ));
        assert!(bisect_decreasing(|x| 3.0 - x, 0.0, 2.0, 1e-9).is_err());
    }

    #[test]
    fn rng_streams_reproduce_and_differ() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..64).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!((a.seed(), a.stream_id()), (7, 3));
    }

    #[test]
    fn rng_first_draws_are_pinned() {
        // Frozen so an accidental change of generator or stream layout is caught.
        let mut r = RngStream::new(0, 0);
        assert_eq!(r.next_u64(), 0xb585_f767_a79a_3b6c);
        assert_eq!(RngStream::new(42, 1).uniform(), 0.716_791_652_504_788_3);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::RngCore;

        proptest! {
            #[test]
            fn sinc_matches_direct_evaluation(re in -35.0f64..35.0, im in -35.0f64..35.0) {
                let z = Complex64::new(re, im);
                prop_assume!(z.norm() >= 1e-4 && z.norm() <= 50.0);
                let direct = z.sin() / z;
                let (r, i) = complex_sinc(re, im);
                let err = (Complex64::new(r, i) - direct).norm();
                prop_assert!(err <= 1e-12 * direct.norm().max(f64::MIN_POSITIVE));
            }

            #[test]
            fn rng_is_reproducible(seed in any::<u64>(), stream in any::<u64>()) {
                let mut a = RngStream::new(seed, stream);
                let mut b = RngStream::new(seed, stream);
                for _ in 0..16 {
                    prop_assert_eq!(a.next_u64(), b.next_u64());
                }
            }
        }
    }
}
