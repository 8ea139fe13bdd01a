//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Maximum number of subintervals before giving up.
pub const MAX_SUBINTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub const ZERO: QuadratureResult = QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 0 };
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    magnitude: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &F, a: f64, b: f64) -> Result<Segment>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    let mut abs_k = kron.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        *slot = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kron * half;
    let res_abs = abs_k * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kron - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        return Err(Error::Numeric(format!("integrand not finite on [{a}, {b}]")));
    }
    Ok(Segment { a, b, value, error, magnitude: res_abs })
}

/// Integrates a fallible integrand over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate_with_breaks(f, a, b, &[], tol)
}

/// As [`integrate`], seeding the subdivision with interior break points
/// (kinks or region boundaries of the integrand).
pub fn integrate_with_breaks<F>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::param(format!("bad integration interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(QuadratureResult::ZERO);
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut points = vec![a];
    points.extend(cuts);
    points.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        heap.push(kronrod(&f, w[0], w[1])?);
        evaluations += 15;
    }
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        // below this the estimate is dominated by rounding and cannot shrink
        let floor = 100.0 * f64::EPSILON * heap.iter().map(|s| s.magnitude).sum::<f64>();
        if error <= tol.max(floor).max(1e-15 * value.abs()) {
            // sum in interval order so the result does not depend on heap layout
            let mut segs = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = segs.iter().map(|s| s.value).sum();
            return Ok(QuadratureResult { value, error_estimate: error, evaluations });
        }
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not reach {tol:e} (estimate {error:e}) within {MAX_SUBINTERVALS} subintervals"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numeric(format!("interval around {mid} cannot be subdivided further")));
        }
        heap.push(kronrod(&f, worst.a, mid)?);
        heap.push(kronrod(&f, mid, worst.b)?);
        evaluations += 30;
    }
}

/// Integrates an infallible integrand over `[a, b]`.
pub fn quadrature_1d<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    integrate(|x| Ok(f(x)), a, b, tol)
}

/// Iterated integral `int_a^b int_{lo(x)}^{hi(x)} g(x, y) dy dx`, with the
/// inner range treated as empty where `hi(x) <= lo(x)`.
pub fn integrate_2d<G, L>(g: G, a: f64, b: f64, limits: L, outer_breaks: &[f64], tol: f64) -> Result<QuadratureResult>
where
    G: Fn(f64, f64) -> Result<f64>,
    L: Fn(f64) -> Result<(f64, f64)>,
{
    let inner_tol = tol / (b - a).abs().max(1.0);
    let inner_err = std::cell::Cell::new(0.0f64);
    let inner_evals = std::cell::Cell::new(0usize);
    let outer = integrate_with_breaks(
        |x| {
            let (lo, hi) = limits(x)?;
            if hi <= lo {
                return Ok(0.0);
            }
            let r = integrate(|y| g(x, y), lo, hi, inner_tol)?;
            inner_err.set(inner_err.get().max(r.error_estimate));
            inner_evals.set(inner_evals.get() + r.evaluations);
            Ok(r.value)
        },
        a,
        b,
        outer_breaks,
        tol,
    )?;
    Ok(QuadratureResult {
        value: outer.value,
        error_estimate: outer.error_estimate + inner_err.get() * (b - a).abs(),
        evaluations: outer.evaluations + inner_evals.get(),
    })
}
