//! Quadrature kernels and the special functions built on them.
//!
//! Everything here is driven by one adaptive Gauss-Kronrod (7/15) engine with
//! global error control: the interval with the largest error estimate is
//! bisected until the summed estimate meets the tolerance. Semi-infinite ranges
//! are mapped onto `[0, 1)` with `z = a + t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Riemann zeta(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_3;
/// Riemann zeta(2) = pi^2 / 6.
pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Tolerances and work budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = QuadSpec {
            rel_tol,
            abs_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions must be at least 1"));
        }
        Ok(())
    }

    /// Same budget, with the relative tolerance replaced.
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        QuadSpec { rel_tol, ..self }
    }

    /// Same budget, with the absolute tolerance replaced.
    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        QuadSpec { abs_tol, ..self }
    }
}

// Kronrod abscissae (descending, last is the centre) and weights; the Gauss
// 7-point rule uses the odd-indexed Kronrod nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        // Ties broken on position so the heap order is fully deterministic.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_centre = f(centre);
    let mut kronrod = f_centre * WGK[7];
    let mut gauss = f_centre * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut values = [(0.0, 0.0); 7];
    for (j, pair) in values.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let left = f(centre - dx);
        let right = f(centre + dx);
        kronrod += WGK[j] * (left + right);
        abs_sum += WGK[j] * (left.abs() + right.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (left + right);
        }
        *pair = (left, right);
    }
    if !kronrod.is_finite() {
        return Err(Error::NoConvergence(format!(
            "integrand is not finite on [{lo}, {hi}]"
        )));
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (f_centre - mean).abs();
    for (j, (left, right)) in values.iter().enumerate() {
        asc += WGK[j] * ((left - mean).abs() + (right - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_sum = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let round_floor = 50.0 * f64::EPSILON * abs_sum;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(round_floor);
    }
    Ok(Segment {
        lo,
        hi,
        value,
        error,
    })
}

/// Adaptive integral of `f` over the consecutive intervals delimited by
/// `points` (at least two, ascending).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], spec: &QuadSpec) -> Result<f64> {
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::invalid("need at least two break points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("break points must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    for w in points.windows(2) {
        if w[1] < w[0] {
            return Err(Error::invalid("break points must be ascending"));
        }
        if w[1] > w[0] {
            heap.push(kronrod15(&f, w[0], w[1])?);
        }
    }
    let mut subdivisions = heap.len();
    loop {
        let (value, error) = heap
            .iter()
            .fold((frozen_value, frozen_error), |(v, e), s| (v + s.value, e + s.error));
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(value);
        }
        let Some(worst) = heap.pop() else {
            // Every remaining interval sits at the floating-point resolution.
            return Ok(value);
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) || (worst.hi - worst.lo) < 1e3 * f64::EPSILON * mid.abs() {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NoConvergence(format!(
                "{} subdivisions exhausted (estimate {value:e}, error {error:e})",
                spec.max_subdivisions
            )));
        }
        heap.push(kronrod15(&f, worst.lo, mid)?);
        heap.push(kronrod15(&f, mid, worst.hi)?);
        subdivisions += 1;
    }
}

/// Adaptive integral of `f` over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<f64> {
    if hi < lo {
        return integrate(f, hi, lo, spec).map(|v| -v);
    }
    integrate_with_breaks(f, &[lo, hi], spec)
}

/// Integral of `f` over `[lo, inf)` through the map `z = lo + t / (1 - t)`.
/// `breaks` are optional interior points in the original variable.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<f64> {
    if !lo.is_finite() {
        return Err(Error::invalid("lower limit must be finite"));
    }
    let mut points = vec![0.0];
    let mut interior: Vec<f64> = breaks
        .iter()
        .filter(|&&z| z > lo && z.is_finite())
        .map(|&z| {
            let d = z - lo;
            d / (1.0 + d)
        })
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    points.extend(interior);
    points.push(1.0);
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let z = lo + t / one_minus;
        let v = f(z);
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    };
    integrate_with_breaks(mapped, &points, spec)
}

/// Integral over `[lower, upper]` of an integrand that may carry
/// inverse-square-root singularities at either endpoint.
///
/// The range is split at its midpoint and each half is mapped with
/// `y = lower + u^2` (resp. `y = upper - u^2`), which turns an
/// `(y - lower)^(-1/2)` factor into a bounded one.
pub fn sqrt_singular_integral<F: Fn(f64) -> f64>(f: F, lower: f64, upper: f64, spec: &QuadSpec) -> Result<f64> {
    if !lower.is_finite() || !upper.is_finite() {
        return Err(Error::invalid("sqrt_singular_integral needs finite limits"));
    }
    if upper == lower {
        return Ok(0.0);
    }
    if upper < lower {
        return sqrt_singular_integral(f, upper, lower, spec).map(|v| -v);
    }
    let centre = 0.5 * (lower + upper);
    let reach_lo = (centre - lower).sqrt();
    let reach_hi = (upper - centre).sqrt();
    let left = integrate(
        |u: f64| {
            let y = (lower + u * u).min(centre);
            2.0 * u * f(y)
        },
        0.0,
        reach_lo,
        spec,
    )?;
    let right = integrate(
        |u: f64| {
            let y = (upper - u * u).max(centre);
            2.0 * u * f(y)
        },
        0.0,
        reach_hi,
        spec,
    )?;
    Ok(left + right)
}

/// Trilogarithm `Li3(x) = sum_k x^k / k^3` on `[0, 1]`.
///
/// Direct series for `x <= 0.5`; above that the Bose integral
/// `Li3(x) = 1/2 int_0^inf t^2 x e^-t / (1 - x e^-t) dt`.
pub fn polylog3(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("polylog3 argument {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(ZETA3);
    }
    if x <= 0.5 {
        let mut sum = 0.0;
        let mut power = 1.0;
        for k in 1..200u32 {
            power *= x;
            let kf = f64::from(k);
            let term = power / (kf * kf * kf);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        return Ok(sum);
    }
    let spec = QuadSpec {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        max_subdivisions: 2000,
    };
    let half = integrate_semi_infinite(
        |t: f64| {
            let w = x * (-t).exp();
            t * t * w / (1.0 - w)
        },
        0.0,
        &[2.0, 8.0],
        &spec,
    )?;
    Ok(0.5 * half)
}

/// Two-occupation thermal kernel
/// `P(a, b) = int_0^inf z dz / ((e^(z+a) - 1)(e^(z+b) - 1))`.
///
/// Evaluated as `e^(-a-b) * J(a, b)` with `J` an O(1) integral, so the
/// tolerances are relative even deep in the Boltzmann tail.
pub fn p_kernel(a: f64, b: f64, spec: &QuadSpec) -> Result<f64> {
    if !(a >= 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("p_kernel arguments must be finite and >= 0, got ({a}, {b})")));
    }
    if a < 1e-14 && b < 1e-14 {
        return Err(Error::DivergentInput(
            "p_kernel diverges logarithmically when both arguments vanish".into(),
        ));
    }
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    let integrand = |z: f64| {
        if z <= 0.0 {
            return 0.0;
        }
        let da = -(-(z + a)).exp_m1();
        let db = -(-(z + b)).exp_m1();
        z * (-2.0 * z).exp() / (da * db)
    };
    let mut breaks: Vec<f64> = [small, large]
        .into_iter()
        .filter(|&p| p > 0.0 && p < 1.0)
        .collect();
    breaks.push(1.0);
    let mut points = vec![0.0];
    points.extend(breaks);
    let spec = spec.with_abs_tol(spec.abs_tol.min(1e-14));
    let head = integrate_with_breaks(integrand, &points, &spec)?;
    let tail = integrate_semi_infinite(integrand, 1.0, &[4.0], &spec)?;
    Ok((-(a + b)).exp() * (head + tail))
}

/// The excited-cloud diffraction factor
/// `int_0^inf z^-3 e^(-1/z) e^(delta^2 mu z / 2) dz`, evaluated after `u = 1/z`
/// as `int_0^inf u e^(-u - c/u) du` with `c = -delta^2 mu / 2`.
///
/// Equals 1 at `mu = 0` and decreases to 0 as `mu -> -inf`. Only meaningful
/// for `delta^2 T >> 1`; the caller is responsible for that regime.
pub fn diffraction_z_integral(delta: f64, mu: f64, temperature: f64, spec: &QuadSpec) -> Result<f64> {
    if !(mu <= 0.0) {
        return Err(Error::invalid(format!("chemical potential must be <= 0, got {mu}")));
    }
    if !(delta > 0.0) || !(temperature > 0.0) {
        return Err(Error::invalid("delta and temperature must be positive"));
    }
    let c = -0.5 * delta * delta * mu;
    let peak = 0.5 * (1.0 + (1.0 + 4.0 * c).sqrt());
    integrate_semi_infinite(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            u * (-u - c / u).exp()
        },
        0.0,
        &[peak, peak + 8.0],
        spec,
    )
}
