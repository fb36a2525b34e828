//! Squared matrix elements `|<m| e^{i delta x} |m'>|^2` of the 1D harmonic
//! oscillator. The 3D element factorises into one such 1D element along the
//! momentum transfer times Kronecker deltas in the transverse quantum numbers,
//! so these are the only overlaps the scattering rates need.
//!
//! Exact values come from the associated-Laguerre closed form
//! `e^{-s} s^k n!/(n+k)! [L_n^(k)(s)]^2`, `s = delta^2/2`, `n = min`,
//! `k = |m - m'|`, evaluated through a normalised three-term recurrence whose
//! iterates are the signed amplitudes themselves (bounded by 1).

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMethod {
    Exact,
    Wkb,
    DeltaApprox,
}

/// A squared 1D matrix element tagged with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapValue {
    pub value: f64,
    pub method: OverlapMethod,
}

/// 3D oscillator state labelled by its Cartesian quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateTriple {
    pub mx: u64,
    pub my: u64,
    pub mz: u64,
}

impl StateTriple {
    pub fn new(mx: u64, my: u64, mz: u64) -> Self {
        StateTriple { mx, my, mz }
    }

    /// Energy above the ground state.
    pub fn energy(&self) -> u64 {
        self.mx + self.my + self.mz
    }
}

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `F(m, delta) = |<0| e^{i delta x} |m>|^2 = e^{-s} s^m / m!`, a Poisson
/// weight in `m` with mean `s = delta^2 / 2`.
pub fn overlap_ground_exact(m: u64, delta: f64) -> OverlapValue {
    let s = 0.5 * delta * delta;
    let value = if s == 0.0 {
        if m == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (-s + m as f64 * s.ln() - ln_factorial(m)).exp()
    };
    OverlapValue {
        value,
        method: OverlapMethod::Exact,
    }
}

const RESCALE_HIGH: f64 = 1e150;
const RESCALE_LOW: f64 = 1e-150;

/// Signed amplitudes `sqrt(e^{-s} s^k n!/(n+k)!) L_n^(k)(s)` for
/// `n = 0..=n_max` at fixed `k`. Their squares are the overlaps between levels
/// `n` and `n + k`.
///
/// The recurrence runs on a mantissa with a separate log scale so that starting
/// values far below `f64::MIN_POSITIVE` (large `k`, small `s`) still seed the
/// growing tail correctly.
pub fn laguerre_band(k: u64, n_max: u64, delta: f64) -> Result<Vec<f64>> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    let s = 0.5 * delta * delta;
    let len = n_max as usize + 1;
    if s == 0.0 {
        let fill = if k == 0 { 1.0 } else { 0.0 };
        return Ok(vec![fill; len]);
    }
    let kf = k as f64;
    let mut scale = 0.5 * (-s + kf * s.ln() - ln_factorial(k));
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut out = Vec::with_capacity(len);
    out.push(cur * scale.exp());
    for j in 0..n_max {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - s) * cur - (jf * (jf + kf)).sqrt() * prev)
            / ((jf + 1.0) * (jf + 1.0 + kf)).sqrt();
        prev = cur;
        cur = next;
        let size = cur.abs().max(prev.abs());
        if size > RESCALE_HIGH || (size < RESCALE_LOW && size > 0.0) {
            let shift = size.ln();
            cur /= size;
            prev /= size;
            scale += shift;
        }
        out.push(cur * scale.exp());
    }
    if let Some(bad) = out.iter().find(|v| !v.is_finite() || v.abs() > 1.0 + 1e-6) {
        return Err(Error::OverflowRisk(format!(
            "amplitude {bad} at k = {k}, delta = {delta} violates |amplitude| <= 1"
        )));
    }
    Ok(out)
}

/// Exact `G(m, m', delta) = |<m| e^{i delta x} |m'>|^2`, symmetric in `(m, m')`.
pub fn overlap_exact(m: u64, m_prime: u64, delta: f64) -> Result<OverlapValue> {
    let n = m.min(m_prime);
    let k = m.max(m_prime) - n;
    let band = laguerre_band(k, n, delta)?;
    let amp = band[n as usize];
    Ok(OverlapValue {
        value: amp * amp,
        method: OverlapMethod::Exact,
    })
}

/// Diagonal amplitude `<m| e^{i delta x} |m> = e^{-delta^2/4} L_m(delta^2/2)`
/// for `m = 0..=m_max`.
pub fn diagonal_amplitudes(m_max: u64, delta: f64) -> Result<Vec<f64>> {
    laguerre_band(0, m_max, delta)
}

/// All squared elements `G(m, m', delta)` for `m, m' <= max_level`, stored
/// row-major. Built band by band so the whole table costs `O(max_level^2)`.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    size: usize,
    delta: f64,
    values: Vec<f64>,
}

impl OverlapTable {
    pub fn new(max_level: u64, delta: f64) -> Result<Self> {
        let size = max_level as usize + 1;
        let mut values = vec![0.0; size * size];
        for k in 0..=max_level {
            let band = laguerre_band(k, max_level - k, delta)?;
            let k = k as usize;
            for (n, amp) in band.into_iter().enumerate() {
                let g = amp * amp;
                values[n * size + n + k] = g;
                values[(n + k) * size + n] = g;
            }
        }
        Ok(OverlapTable { size, delta, values })
    }

    pub fn max_level(&self) -> u64 {
        self.size as u64 - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn get(&self, m: usize, m_prime: usize) -> f64 {
        self.values[m * self.size + m_prime]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.size..(m + 1) * self.size]
    }
}

/// Delta-function reduction of `F(m, delta)`: all weight sits at
/// `m* = delta^2 / 2` with unit integral over `m`.
pub fn ground_transition_weight(delta: f64) -> (f64, f64) {
    (0.5 * delta * delta, 1.0)
}

const WKB_RADICAND_FLOOR: f64 = 1e-12;

/// Stationary-phase `G(m, m', delta)`:
/// `(1/2 pi) [2 M' delta^2 - (M - M' - delta^2/2)^2]^(-1/2)` with
/// `(M, M') = (max, min)`, zero outside the classically allowed region.
/// Levels are continuous here. At the support boundary the radicand is
/// floored at `1e-12`; the singularity is integrable.
pub fn overlap_wkb(m: f64, m_prime: f64, delta: f64) -> OverlapValue {
    let (upper, lower) = if m >= m_prime { (m, m_prime) } else { (m_prime, m) };
    let d2 = delta * delta;
    let gap = upper - lower - 0.5 * d2;
    let radicand = 2.0 * lower * d2 - gap * gap;
    let value = if radicand > 0.0 {
        1.0 / (2.0 * PI * radicand.max(WKB_RADICAND_FLOOR).sqrt())
    } else {
        0.0
    };
    OverlapValue {
        value,
        method: OverlapMethod::Wkb,
    }
}

/// Range of `m'` for which [`overlap_wkb`] is non-zero at given `m`:
/// `[(sqrt m - delta/sqrt 2)^2, (sqrt m + delta/sqrt 2)^2]`.
pub fn wkb_support(m: f64, delta: f64) -> (f64, f64) {
    let root = m.max(0.0).sqrt();
    let half = delta / std::f64::consts::SQRT_2;
    ((root - half).powi(2), (root + half).powi(2))
}

#[cfg(test)]
#[path = "../tests/common/hermite.rs"]
mod hermite_oracle;
