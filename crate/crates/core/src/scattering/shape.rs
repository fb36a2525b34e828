//! Dimensionless shape `f(a)` of the m <-> m' Bose-stimulated rate,
//! `dsigma/dOmega = T^3 f(a)` with `a = delta^2 / 2T`:
//!
//! `f(a) = (1/pi) int_{a/4}^inf dx int_{y_lo}^{x} dy P(x + nu, y + nu) / sqrt((y - y_lo)(y_hi - y))`
//!
//! where `y_lo, y_hi = x + a -+ 2 sqrt(a x)` and `nu = -mu/T` (0 below Tc).
//! The middle integral is taken in the angle `theta` with
//! `y = x + a - 2 sqrt(a x) cos(theta)`, which absorbs both inverse square
//! roots into `dy / sqrt(..) = d theta`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_semi_infinite, p_kernel, sqrt_singular_integral, QuadSpec};

/// Tolerances for the three nested levels of the shape integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeTolerances {
    pub outer: QuadSpec,
    pub middle: QuadSpec,
    pub inner: QuadSpec,
}

impl Default for ShapeTolerances {
    fn default() -> Self {
        ShapeTolerances {
            outer: QuadSpec { rel_tol: 1e-6, abs_tol: 1e-300, max_subdivisions: 400 },
            middle: QuadSpec { rel_tol: 1e-7, abs_tol: 1e-300, max_subdivisions: 400 },
            inner: QuadSpec { rel_tol: 1e-8, abs_tol: 1e-14, max_subdivisions: 400 },
        }
    }
}

/// Runs `body` with an integrand wrapper that records the first error raised
/// inside the callback; quadrature callbacks cannot return `Result`.
fn with_trap<T>(body: impl FnOnce(&dyn Fn(Result<f64>) -> f64) -> Result<T>) -> Result<T> {
    let trapped: RefCell<Option<Error>> = RefCell::new(None);
    let catch = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            trapped.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let out = body(&catch);
    if let Some(e) = trapped.into_inner() {
        return Err(e);
    }
    out
}

fn check_args(a: f64, nu: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("shape argument a must be positive and finite, got {a}")));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::invalid(format!("nu = -mu/T must be finite and >= 0, got {nu}")));
    }
    Ok(())
}

fn lower_root_gap(x: f64, a: f64) -> f64 {
    let d = x.sqrt() - a.sqrt();
    d * d
}

/// Middle integral at fixed `x` in the angle variable.
fn middle_theta(x: f64, a: f64, nu: f64, tol: &ShapeTolerances) -> Result<f64> {
    let ratio = (0.25 * a / x).sqrt();
    if ratio >= 1.0 {
        return Ok(0.0);
    }
    let theta_max = ratio.acos();
    let base = lower_root_gap(x, a);
    let chord = 2.0 * (a * x).sqrt();
    with_trap(|catch| {
        integrate(
            |theta: f64| {
                let half = (0.5 * theta).sin();
                let y = base + 2.0 * chord * half * half;
                catch(p_kernel(x + nu, y + nu, &tol.inner))
            },
            0.0,
            theta_max,
            &tol.middle,
        )
    })
}

/// Same middle integral taken directly in `s = y - y_lo` with the
/// endpoint-singular rule.
fn middle_direct(x: f64, a: f64, nu: f64, tol: &ShapeTolerances) -> Result<f64> {
    let y_lo = lower_root_gap(x, a);
    let reach = x - y_lo;
    if reach <= 0.0 {
        return Ok(0.0);
    }
    let span = 4.0 * (a * x).sqrt();
    with_trap(|catch| {
        sqrt_singular_integral(
            |s: f64| {
                let h = span - s;
                if s <= 0.0 || h <= 0.0 {
                    return 0.0;
                }
                catch(p_kernel(x + nu, y_lo + s + nu, &tol.inner)) / (s * h).sqrt()
            },
            0.0,
            reach,
            &tol.middle,
        )
    })
}

fn outer(a: f64, nu: f64, tol: &ShapeTolerances, middle: fn(f64, f64, f64, &ShapeTolerances) -> Result<f64>) -> Result<f64> {
    check_args(a, nu)?;
    let start = 0.25 * a;
    // x = a/4 + w^2 removes the square-root onset of the middle range.
    let breaks: Vec<f64> = [a, 10.0 * a, 1e-2, 0.1, 1.0, 4.0, 12.0]
        .into_iter()
        .filter(|&x| x > start)
        .map(|x| (x - start).sqrt())
        .collect();
    let total = with_trap(|catch| {
        integrate_semi_infinite(
            |w: f64| {
                if w <= 0.0 {
                    return 0.0;
                }
                2.0 * w * catch(middle(start + w * w, a, nu, tol))
            },
            0.0,
            &breaks,
            &tol.outer,
        )
    })?;
    Ok(total / PI)
}

/// `f(a; nu)` by nested adaptive quadrature.
pub fn shape_function(a: f64, nu: f64, tol: &ShapeTolerances) -> Result<f64> {
    outer(a, nu, tol, middle_theta)
}

/// `f(a; nu)` with the middle integral taken in `y` directly. Slower; kept as an
/// independent route for validation.
pub fn shape_function_direct(a: f64, nu: f64, tol: &ShapeTolerances) -> Result<f64> {
    outer(a, nu, tol, middle_direct)
}

pub const SHAPE_GRID_MIN: f64 = 1e-3;
pub const SHAPE_GRID_MAX: f64 = 40.0;
pub const SHAPE_GRID_POINTS: usize = 120;

/// `f(a; nu)` tabulated on a log grid and interpolated with a monotone cubic
/// (Fritsch-Carlson) in `(ln a, ln f)`.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    nu: f64,
    ln_a: Vec<f64>,
    ln_f: Vec<f64>,
    slopes: Vec<f64>,
}

impl ShapeTable {
    pub fn build(nu: f64, tol: &ShapeTolerances) -> Result<Self> {
        Self::build_on(nu, SHAPE_GRID_MIN, SHAPE_GRID_MAX, SHAPE_GRID_POINTS, tol)
    }

    pub fn build_on(nu: f64, a_min: f64, a_max: f64, points: usize, tol: &ShapeTolerances) -> Result<Self> {
        if !(a_min > 0.0 && a_max > a_min) || points < 2 {
            return Err(Error::invalid("shape grid needs 0 < a_min < a_max and at least 2 points"));
        }
        let (l0, l1) = (a_min.ln(), a_max.ln());
        let step = (l1 - l0) / (points - 1) as f64;
        let ln_a: Vec<f64> = (0..points).map(|i| l0 + step * i as f64).collect();
        let values: Vec<Result<f64>> = ln_a.par_iter().map(|&la| shape_function(la.exp(), nu, tol)).collect();
        let mut ln_f = Vec::with_capacity(points);
        for v in values {
            let v = v?;
            if !(v > 0.0) {
                return Err(Error::NoConvergence(format!("shape value {v} is not positive")));
            }
            ln_f.push(v.ln());
        }
        let slopes = monotone_slopes(&ln_a, &ln_f);
        Ok(ShapeTable { nu, ln_a, ln_f, slopes })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn a_range(&self) -> (f64, f64) {
        (self.ln_a[0].exp(), self.ln_a[self.ln_a.len() - 1].exp())
    }

    /// Grid nodes `(a, f(a))`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ln_a.iter().zip(&self.ln_f).map(|(la, lf)| (la.exp(), lf.exp()))
    }

    /// Interpolated `f(a)`, or `None` outside the tabulated range.
    pub fn eval(&self, a: f64) -> Option<f64> {
        if !(a > 0.0) {
            return None;
        }
        let x = a.ln();
        let n = self.ln_a.len();
        let eps = 1e-12;
        if x < self.ln_a[0] - eps || x > self.ln_a[n - 1] + eps {
            return None;
        }
        let x = x.clamp(self.ln_a[0], self.ln_a[n - 1]);
        let i = match self.ln_a.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.ln_a[i + 1] - self.ln_a[i];
        let t = (x - self.ln_a[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * self.ln_f[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ln_f[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1];
        Some(value.exp())
    }

    /// `int_0^inf f(a) da`: the interpolant over the grid, `f` held at its first
    /// node below the grid, and an exponential tail fitted to the last interval.
    pub fn integral(&self) -> Result<f64> {
        let n = self.ln_a.len();
        let (a0, a1) = self.a_range();
        let spec = QuadSpec { rel_tol: 1e-9, abs_tol: 1e-300, max_subdivisions: 4000 };
        let knots: Vec<f64> = self.ln_a.clone();
        let body = crate::quad::integrate_with_breaks(
            |la: f64| {
                let a = la.exp();
                self.eval(a).unwrap_or(0.0) * a
            },
            &knots,
            &spec,
        )?;
        let head = self.ln_f[0].exp() * a0;
        let rate = (self.ln_f[n - 2] - self.ln_f[n - 1]) / (a1 - self.ln_a[n - 2].exp());
        let tail = if rate > 0.0 { self.ln_f[n - 1].exp() / rate } else { 0.0 };
        Ok(head + body + tail)
    }
}

fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = secant[0];
    m[n - 1] = secant[n - 2];
    for i in 1..n - 1 {
        m[i] = if secant[i - 1] * secant[i] <= 0.0 { 0.0 } else { 0.5 * (secant[i - 1] + secant[i]) };
    }
    for i in 0..n - 1 {
        if secant[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let (alpha, beta) = (m[i] / secant[i], m[i + 1] / secant[i]);
        let r = alpha * alpha + beta * beta;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * alpha * secant[i];
            m[i + 1] = tau * beta * secant[i];
        }
    }
    m
}

/// How [`ShapeCache`] answers point queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShapeMode {
    /// Interpolate on a [`ShapeTable`] built once per `nu`.
    #[default]
    Tabulated,
    /// Evaluate the triple integral at every query.
    Direct,
}

type TableSlot = Arc<OnceLock<std::result::Result<Arc<ShapeTable>, Error>>>;

/// Per-`nu` shape tables, built lazily on first use and shared read-only.
#[derive(Debug, Default)]
pub struct ShapeCache {
    mode: ShapeMode,
    tol: ShapeTolerances,
    tables: Mutex<HashMap<u64, TableSlot>>,
}

impl ShapeCache {
    pub fn new(mode: ShapeMode, tol: ShapeTolerances) -> Self {
        ShapeCache { mode, tol, tables: Mutex::new(HashMap::new()) }
    }

    pub fn mode(&self) -> ShapeMode {
        self.mode
    }

    pub fn tolerances(&self) -> &ShapeTolerances {
        &self.tol
    }

    pub fn table(&self, nu: f64) -> Result<Arc<ShapeTable>> {
        let slot = {
            let mut map = self.tables.lock().unwrap_or_else(|p| p.into_inner());
            map.entry(nu.to_bits()).or_default().clone()
        };
        slot.get_or_init(|| ShapeTable::build(nu, &self.tol).map(Arc::new)).clone()
    }

    /// `f(a; nu)`. In tabulated mode, queries outside the grid fall back to
    /// direct quadrature.
    pub fn value(&self, a: f64, nu: f64) -> Result<f64> {
        match self.mode {
            ShapeMode::Direct => shape_function(a, nu, &self.tol),
            ShapeMode::Tabulated => match self.table(nu)?.eval(a) {
                Some(v) => Ok(v),
                None => shape_function(a, nu, &self.tol),
            },
        }
    }

    /// `int_0^inf f(a; nu) da` from the table.
    pub fn integral(&self, nu: f64) -> Result<f64> {
        self.table(nu)?.integral()
    }
}
