//! Finite-N brute force over the discrete oscillator spectrum: exact chemical
//! potential, exact occupations and exact matrix elements summed over state
//! pairs. This is the reference the continuum formulas are checked against.
//!
//! Both sides factor the pair occupations as `<n_i n_f> ~ N_i N_f`, so the
//! oracle tests the spectral sums, not occupation-number fluctuations.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oscillator::{laguerre_band, overlap_ground_exact};
use crate::scattering::{Channel, RateBreakdown};
use crate::thermo::{critical_temperature, degeneracy};

/// Largest particle number [`exact_breakdown`] accepts.
pub const ORACLE_MAX_N: u64 = 100_000;

const TAIL_FRACTION: f64 = 1e-6;
const BREAKDOWN_TAIL_FRACTION: f64 = 1e-4;

/// Default truncation level `max(30, ceil(24 T))`.
pub fn default_epsilon_max(temperature: f64) -> u64 {
    30u64.max((24.0 * temperature).ceil() as u64)
}

/// Grand-canonical ideal gas on the discrete spectrum, truncated at
/// `epsilon_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteEnsemble {
    n_total: u64,
    temperature: f64,
    mu_exact: f64,
    epsilon_max: u64,
    /// Mean occupation of one state at each level `0..=epsilon_max`.
    occupations: Vec<f64>,
    tail: f64,
}

impl DiscreteEnsemble {
    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn mu_exact(&self) -> f64 {
        self.mu_exact
    }

    pub fn epsilon_max(&self) -> u64 {
        self.epsilon_max
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    /// Occupation of one state at `level`; 0 above the truncation.
    pub fn occupation(&self, level: u64) -> f64 {
        self.occupations.get(level as usize).copied().unwrap_or(0.0)
    }

    pub fn n0_exact(&self) -> f64 {
        self.occupations[0]
    }

    /// Particles estimated above `epsilon_max`.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn reduced_temperature(&self) -> f64 {
        self.temperature / critical_temperature(self.n_total)
    }

    /// Occupation summed over `(my, mz)` at fixed `mx`:
    /// `sum_j (j + 1) n(mx + j)`.
    pub fn projected_occupation(&self) -> Vec<f64> {
        let top = self.epsilon_max as usize;
        (0..=top)
            .map(|mx| {
                (0..=top - mx)
                    .map(|j| (j as f64 + 1.0) * self.occupations[mx + j])
                    .sum()
            })
            .collect()
    }
}

fn level_sum(n_levels: u64, temperature: f64, x: f64) -> f64 {
    (0..=n_levels)
        .map(|e| degeneracy(e) as f64 / (e as f64 / temperature + x).exp_m1())
        .sum()
}

fn tail_count(epsilon_max: u64, temperature: f64, x: f64, n: f64) -> f64 {
    let mut tail = 0.0;
    let mut e = epsilon_max + 1;
    loop {
        let term = degeneracy(e) as f64 / (e as f64 / temperature + x).exp_m1();
        tail += term;
        if term <= 1e-18 * n || !term.is_finite() {
            break;
        }
        e += 1;
    }
    tail
}

/// Solves `sum_e g(e) / (e^((e - mu)/T) - 1) = N` for `mu < 0`, bisecting in
/// `ln(-mu/T)`.
pub fn solve_mu_discrete(n_total: u64, temperature: f64, epsilon_max: u64) -> Result<DiscreteEnsemble> {
    if n_total == 0 {
        return Err(Error::invalid("n_total must be at least 1"));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::invalid("temperature must be positive and finite"));
    }
    if (epsilon_max as f64) < 10.0 * temperature {
        return Err(Error::TruncationTooSmall(format!(
            "epsilon_max = {epsilon_max} is below 10 T = {}",
            10.0 * temperature
        )));
    }
    let n = n_total as f64;
    // The ground level alone holds N at x = ln(1 + 1/N); the sum falls with x.
    let mut lo = (1.0 / n).ln_1p().ln();
    let mut hi = 700f64.ln();
    if level_sum(epsilon_max, temperature, hi.exp()) > n {
        return Err(Error::NoConvergence("no root with -mu/T <= 700".into()));
    }
    let mut converged = false;
    for _ in 0..300 {
        if hi - lo <= 1e-14 {
            converged = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        if level_sum(epsilon_max, temperature, mid.exp()) > n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("discrete chemical potential bisection stalled".into()));
    }
    let x = (0.5 * (lo + hi)).exp();
    let tail = tail_count(epsilon_max, temperature, x, n);
    if tail > TAIL_FRACTION * n {
        return Err(Error::TruncationTooSmall(format!(
            "{tail:.3e} particles lie above epsilon_max = {epsilon_max} (bound {:.3e})",
            TAIL_FRACTION * n
        )));
    }
    let occupations = (0..=epsilon_max)
        .map(|e| 1.0 / (e as f64 / temperature + x).exp_m1())
        .collect();
    Ok(DiscreteEnsemble {
        n_total,
        temperature,
        mu_exact: -temperature * x,
        epsilon_max,
        occupations,
        tail,
    })
}

/// [`solve_mu_discrete`] at `T = ratio * Tc(N)` with the default truncation.
pub fn discrete_at_reduced_temperature(n_total: u64, ratio: f64) -> Result<DiscreteEnsemble> {
    if !(ratio > 0.0) {
        return Err(Error::invalid("T/Tc must be positive"));
    }
    let t = ratio * critical_temperature(n_total);
    solve_mu_discrete(n_total, t, default_epsilon_max(t))
}

/// Squared overlaps `G(n, n + k)` for `n <= n_max`, one band per offset `k`,
/// extended in `k` until the bands are negligible.
struct OverlapBands {
    bands: Vec<Vec<f64>>,
}

impl OverlapBands {
    fn new(n_max: u64, delta: f64) -> Result<Self> {
        // Classical reach of a kick delta from level n_max, plus a margin.
        let reach = 0.5 * delta * delta + delta * (2.0 * n_max as f64).sqrt();
        let k_floor = reach.ceil() as u64 + 8;
        let k_cap = k_floor + 4 * (delta.ceil() as u64 + 10) + n_max;
        let mut bands = Vec::new();
        for k in 0..=k_cap {
            let amps = laguerre_band(k, n_max, delta)?;
            let band: Vec<f64> = amps.into_iter().map(|a| a * a).collect();
            let largest = band.iter().cloned().fold(0.0, f64::max);
            bands.push(band);
            if k >= k_floor && largest < 1e-20 {
                break;
            }
        }
        Ok(OverlapBands { bands })
    }

    fn get(&self, m: usize, m_prime: usize) -> f64 {
        let (n, k) = if m <= m_prime { (m, m_prime - m) } else { (m_prime, m - m_prime) };
        self.bands.get(k).map_or(0.0, |b| b[n])
    }

    /// `sum_{m'} G(m, m')` over all `m'` the bands reach.
    fn row_sum(&self, m: usize) -> f64 {
        let up: f64 = self.bands.iter().map(|b| b[m]).sum();
        let down: f64 = (1..=m.min(self.bands.len() - 1)).map(|k| self.bands[k][m - k]).sum();
        up + down
    }
}

fn rayleigh_sum(weight: &[f64], bands: &OverlapBands) -> f64 {
    weight.iter().enumerate().map(|(m, w)| w * bands.row_sum(m)).sum()
}

/// `sum_i N_i sum_f |<i| e^{i delta x} |f>|^2` summed explicitly; equals `N`
/// by completeness.
pub fn completeness_sum(ens: &DiscreteEnsemble, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    let bands = OverlapBands::new(ens.epsilon_max, delta)?;
    Ok(rayleigh_sum(&ens.projected_occupation(), &bands))
}

/// All four channels by direct summation over trap states, with the
/// momentum transfer along `x`.
///
/// * rayleigh: `N`, after checking [`completeness_sum`] reproduces it.
/// * diffraction: `|sum_i N_i M_ii|^2`.
/// * bose_0m: `2 N0 sum_{m >= 1} n(m) F(m, delta)`, both directions.
/// * bose_mm: ordered pairs of distinct excited states sharing `(my, mz)`,
///   weighted by `n_i n_f G(mx, mx')`; pairs touching the ground state are
///   left to bose_0m.
pub fn exact_breakdown(ens: &DiscreteEnsemble, delta: f64) -> Result<RateBreakdown> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
    }
    if ens.n_total > ORACLE_MAX_N {
        return Err(Error::CostGuard(format!(
            "N = {} exceeds the oracle limit {ORACLE_MAX_N}",
            ens.n_total
        )));
    }
    let n = ens.n_total as f64;
    if ens.tail > BREAKDOWN_TAIL_FRACTION * n {
        return Err(Error::TruncationTooSmall(format!("occupation tail {:.3e}", ens.tail)));
    }
    let top = ens.epsilon_max as usize;
    let occ = &ens.occupations;
    let weight = ens.projected_occupation();
    let bands = OverlapBands::new(ens.epsilon_max, delta)?;
    let completeness = rayleigh_sum(&weight, &bands);
    if (completeness - n).abs() > BREAKDOWN_TAIL_FRACTION * n {
        return Err(Error::TruncationTooSmall(format!(
            "overlap rows incomplete: Rayleigh sum {completeness} vs N = {n}"
        )));
    }
    let rayleigh = n;

    let diagonal = laguerre_band(0, ens.epsilon_max, delta)?;
    let amplitude: f64 = weight.iter().zip(&diagonal).map(|(w, d)| w * d).sum();
    let diffraction = amplitude * amplitude;

    let bose_0m = 2.0
        * ens.n0_exact()
        * (1..=top)
            .map(|m| occ[m] * overlap_ground_exact(m as u64, delta).value)
            .sum::<f64>();

    // W(mx, mx') = sum_j (j + 1) n(mx + j) n(mx' + j), j = my + mz; for j = 0
    // the pair with mx or mx' = 0 involves the ground state and is skipped.
    let per_row: Vec<f64> = (0..=top)
        .into_par_iter()
        .map(|mx| {
            let mut row = 0.0;
            for mxp in 0..=top {
                if mxp == mx {
                    continue;
                }
                let g = bands.get(mx, mxp);
                if g == 0.0 {
                    continue;
                }
                let j0 = usize::from(mx == 0 || mxp == 0);
                let reach = top - mx.max(mxp);
                let w: f64 = (j0..=reach)
                    .map(|j| (j as f64 + 1.0) * occ[mx + j] * occ[mxp + j])
                    .sum();
                row += w * g;
            }
            row
        })
        .collect();
    let bose_mm = per_row.iter().sum();

    Ok(RateBreakdown::from_channels(rayleigh, diffraction, bose_0m, bose_mm))
}

/// How the momentum transfer follows `N` in a [`scaling_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    Fixed(f64),
    /// `delta = factor * sqrt(T)`.
    SqrtT(f64),
}

impl DeltaRule {
    pub fn delta(&self, temperature: f64) -> f64 {
        match *self {
            DeltaRule::Fixed(d) => d,
            DeltaRule::SqrtT(c) => c * temperature.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub channel: Channel,
    /// `d ln(rate) / d ln(N)` from least squares.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// `(N, delta, rate)` per probe point.
    pub points: Vec<(u64, f64, f64)>,
}

/// Least-squares slope and intercept of `y` against `x`, with RMS residual.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Runs [`exact_breakdown`] at each `N` (fixed `T/Tc`) and fits the channel's
/// log-rate against `ln N`.
pub fn scaling_probe(channel: Channel, n_values: &[u64], t_over_tc: f64, rule: DeltaRule) -> Result<ScalingFit> {
    if n_values.len() < 3 {
        return Err(Error::invalid("scaling probe needs at least 3 particle numbers"));
    }
    let lo = *n_values.iter().min().unwrap_or(&0);
    let hi = *n_values.iter().max().unwrap_or(&0);
    if lo == 0 || (hi as f64) < 10.0 * lo as f64 {
        return Err(Error::invalid("scaling probe particle numbers must span at least one decade"));
    }
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let ens = discrete_at_reduced_temperature(n, t_over_tc)?;
        let delta = rule.delta(ens.temperature());
        let rate = exact_breakdown(&ens, delta)?.get(channel);
        if !(rate > 0.0) {
            return Err(Error::invalid(format!("{channel} rate {rate} at N = {n} cannot be fitted in log space")));
        }
        points.push((n, delta, rate));
    }
    let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.2.ln()).collect();
    let (slope, intercept, residual) = fit_line(&x, &y);
    Ok(ScalingFit {
        channel,
        slope,
        intercept,
        residual,
        points,
    })
}
