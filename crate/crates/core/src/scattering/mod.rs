//! Differential and total cross sections of the four scattering channels, in
//! units of the one-particle cross section.
//!
//! Differential rates are per solid angle and depend on the momentum transfer
//! `delta` only; totals integrate them with `dOmega = delta d(delta) d(phi) / k^2`
//! (small-angle kinematics). Photon polarisation is ignored throughout.

pub mod shape;

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{diffraction_z_integral, integrate, QuadSpec};
use crate::thermo::TrapEnsemble;
use shape::ShapeCache;

/// Photon kinematics at small angle, `theta ~ delta / k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    k_incident: f64,
    delta: f64,
}

impl Kinematics {
    pub fn new(k_incident: f64, delta: f64) -> Result<Self> {
        if !(k_incident > 0.0) || !k_incident.is_finite() {
            return Err(Error::invalid(format!("k_incident must be positive, got {k_incident}")));
        }
        if !(delta >= 0.0) || delta > 2.0 * k_incident {
            return Err(Error::invalid(format!(
                "delta = {delta} outside the elastic range [0, 2 k_incident = {}]",
                2.0 * k_incident
            )));
        }
        Ok(Kinematics { k_incident, delta })
    }

    /// Kinematics with no particular momentum transfer, for total cross sections.
    pub fn incident(k_incident: f64) -> Result<Self> {
        Self::new(k_incident, 0.0)
    }

    pub fn k_incident(&self) -> f64 {
        self.k_incident
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta(&self) -> f64 {
        self.delta / self.k_incident
    }

    /// Largest kinematically allowed momentum transfer (backscattering).
    pub fn delta_max(&self) -> f64 {
        2.0 * self.k_incident
    }

    /// `d(Omega) / d(delta)` after the azimuthal integral: `2 pi delta / k^2`.
    pub fn solid_angle_jacobian(&self, delta: f64) -> f64 {
        2.0 * PI * delta / (self.k_incident * self.k_incident)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Rayleigh,
    Diffraction,
    Bose0m,
    BoseMm,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Rayleigh, Channel::Diffraction, Channel::Bose0m, Channel::BoseMm];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Rayleigh => "rayleigh",
            Channel::Diffraction => "diffraction",
            Channel::Bose0m => "bose_0m",
            Channel::BoseMm => "bose_mm",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown channel `{s}`")))
    }
}

/// Whether a channel value lies inside the regime its formula was derived for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    #[default]
    Valid,
    /// Value reported, but outside the derivation's regime.
    Extrapolated,
    /// No semiclassical value; reported as 0.
    OutOfRange,
    /// The evaluation raised an error; reported as 0.
    Failed,
}

impl Validity {
    pub fn code(self) -> char {
        match self {
            Validity::Valid => 'V',
            Validity::Extrapolated => 'E',
            Validity::OutOfRange => 'O',
            Validity::Failed => 'F',
        }
    }
}

/// Per-channel differential rates at one momentum transfer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBreakdown {
    pub rayleigh: f64,
    pub diffraction: f64,
    pub bose_0m: f64,
    pub bose_mm: f64,
    pub total: f64,
    pub flags: [Validity; 4],
    pub failures: Vec<String>,
}

impl RateBreakdown {
    /// Breakdown with `total` set to the channel sum and every channel valid.
    pub fn from_channels(rayleigh: f64, diffraction: f64, bose_0m: f64, bose_mm: f64) -> Self {
        RateBreakdown {
            rayleigh,
            diffraction,
            bose_0m,
            bose_mm,
            total: rayleigh + diffraction + bose_0m + bose_mm,
            flags: [Validity::Valid; 4],
            failures: Vec::new(),
        }
    }

    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Rayleigh => self.rayleigh,
            Channel::Diffraction => self.diffraction,
            Channel::Bose0m => self.bose_0m,
            Channel::BoseMm => self.bose_mm,
        }
    }

    pub fn flag(&self, channel: Channel) -> Validity {
        self.flags[channel.index()]
    }

    pub fn has_failure(&self) -> bool {
        self.flags.contains(&Validity::Failed)
    }

    /// Four-letter validity code in channel order, e.g. `VVOV`.
    pub fn flag_string(&self) -> String {
        self.flags.iter().map(|f| f.code()).collect()
    }

    /// Channel whose rate is largest, with ties resolved in channel order.
    pub fn dominant(&self) -> Channel {
        let mut best = Channel::Rayleigh;
        for c in Channel::ALL {
            if self.get(c) > self.get(best) {
                best = c;
            }
        }
        best
    }

    fn set(&mut self, channel: Channel, value: f64, flag: Validity) {
        match channel {
            Channel::Rayleigh => self.rayleigh = value,
            Channel::Diffraction => self.diffraction = value,
            Channel::Bose0m => self.bose_0m = value,
            Channel::BoseMm => self.bose_mm = value,
        }
        self.flags[channel.index()] = flag;
    }

    fn resum(&mut self) {
        self.total = self.rayleigh + self.diffraction + self.bose_0m + self.bose_mm;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayleighRate {
    pub differential: f64,
    pub total: f64,
}

/// Incoherent scattering: every atom scatters independently and isotropically.
pub fn rayleigh(ensemble: &TrapEnsemble) -> RayleighRate {
    let n = ensemble.n_total() as f64;
    RayleighRate {
        differential: n,
        total: 4.0 * PI * n,
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be positive and finite, got {delta}")));
    }
    Ok(())
}

/// Excited-cloud diffraction amplitude `(4T / delta^4) Z(delta, mu, T)`.
pub fn diffraction_excited_amplitude(ensemble: &TrapEnsemble, delta: f64, spec: &QuadSpec) -> Result<f64> {
    check_delta(delta)?;
    let t = ensemble.temperature();
    let z = diffraction_z_integral(delta, ensemble.continuum_mu(), t, spec)?;
    Ok(4.0 * t / delta.powi(4) * z)
}

/// Coherent elastic scattering off the density:
/// `|N0 e^(-delta^2/4) + (4T/delta^4) Z|^2`, cross term included.
///
/// The excited term assumes `delta^2 T >= 1`; use [`decompose`] for the
/// flagged extrapolation below that.
pub fn diffraction_differential(ensemble: &TrapEnsemble, delta: f64, spec: &QuadSpec) -> Result<f64> {
    let amp = ensemble.n_condensate() * (-0.25 * delta * delta).exp()
        + diffraction_excited_amplitude(ensemble, delta, spec)?;
    Ok(amp * amp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffractionTotal {
    /// `2 pi N0^2 / k^2`.
    pub condensate: f64,
    /// Condensate term `N0^2 e^(-delta^2/2)` integrated over `delta in [0, 2k]`.
    pub condensate_numeric: f64,
    /// Excited term alone, integrated from `delta_min = T^(-1/2)`.
    pub excited_cutoff: f64,
}

pub fn diffraction_total(ensemble: &TrapEnsemble, kin: &Kinematics, spec: &QuadSpec) -> Result<DiffractionTotal> {
    let k2 = kin.k_incident() * kin.k_incident();
    let n0 = ensemble.n_condensate();
    let condensate = 2.0 * PI * n0 * n0 / k2;
    let upper = kin.delta_max();
    let condensate_numeric = integrate(
        |d: f64| n0 * n0 * (-0.5 * d * d).exp() * kin.solid_angle_jacobian(d),
        0.0,
        upper,
        spec,
    )?;
    let delta_min = ensemble.temperature().sqrt().recip();
    let excited_cutoff = if delta_min >= upper {
        0.0
    } else {
        let trapped = std::cell::RefCell::new(None);
        let v = integrate(
            |d: f64| match diffraction_excited_amplitude(ensemble, d, spec) {
                Ok(amp) => amp * amp * kin.solid_angle_jacobian(d),
                Err(e) => {
                    trapped.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            delta_min,
            upper,
            spec,
        )?;
        if let Some(e) = trapped.into_inner() {
            return Err(e);
        }
        v
    };
    Ok(DiffractionTotal {
        condensate,
        condensate_numeric,
        excited_cutoff,
    })
}

/// Condensate <-> excited Bose-stimulated rate `2 N0 / (e^(delta^2/2T) - 1)`.
pub fn bose_0m_differential(ensemble: &TrapEnsemble, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let x = 0.5 * delta * delta / ensemble.temperature();
    Ok(2.0 * ensemble.n_condensate() / x.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bose0mTotal {
    /// Leading-log estimate `(4 pi N0 T / k^2) ln(2T)`.
    pub estimate: f64,
    /// Differential rate integrated over `delta in [1, 2k]`.
    pub numeric: f64,
}

pub fn bose_0m_total(ensemble: &TrapEnsemble, kin: &Kinematics, spec: &QuadSpec) -> Result<Bose0mTotal> {
    let t = ensemble.temperature();
    if !(t > 1.0) {
        return Err(Error::invalid(format!(
            "the leading-log estimate needs T > 1, got T = {t}"
        )));
    }
    let k2 = kin.k_incident() * kin.k_incident();
    let n0 = ensemble.n_condensate();
    let estimate = 4.0 * PI * n0 * t / k2 * (2.0 * t).ln();
    let upper = kin.delta_max();
    let numeric = if upper <= 1.0 {
        0.0
    } else {
        let hump = (2.0 * t).sqrt();
        let breaks: Vec<f64> = [1.0, hump, 4.0 * hump, upper]
            .into_iter()
            .filter(|&d| d >= 1.0 && d <= upper)
            .collect();
        let mut points = breaks;
        points.sort_by(f64::total_cmp);
        points.dedup();
        crate::quad::integrate_with_breaks(
            |d: f64| {
                let x = 0.5 * d * d / t;
                2.0 * n0 / x.exp_m1() * kin.solid_angle_jacobian(d)
            },
            &points,
            spec,
        )?
    };
    Ok(Bose0mTotal { estimate, numeric })
}

/// `nu = -mu/T` entering the m <-> m' kernel: 0 at or below Tc.
pub fn shape_nu(ensemble: &TrapEnsemble) -> f64 {
    let nu = -ensemble.continuum_mu() / ensemble.temperature();
    nu.max(0.0)
}

/// Excited <-> excited Bose-stimulated rate `T^3 f(a)`, `a = delta^2 / 2T`.
pub fn bose_mm_differential(ensemble: &TrapEnsemble, delta: f64, shapes: &ShapeCache) -> Result<f64> {
    check_delta(delta)?;
    let t = ensemble.temperature();
    let a = 0.5 * delta * delta / t;
    Ok(t.powi(3) * shapes.value(a, shape_nu(ensemble))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoseMmTotal {
    /// `(2 pi T^4 / k^2) int_0^inf f(a) da`.
    pub formula: f64,
    /// Order-of-magnitude target `Ne^(4/3) / k^2`.
    pub order_estimate: f64,
}

pub fn bose_mm_total(ensemble: &TrapEnsemble, kin: &Kinematics, shapes: &ShapeCache) -> Result<BoseMmTotal> {
    let t = ensemble.temperature();
    let k2 = kin.k_incident() * kin.k_incident();
    let integral = shapes.integral(shape_nu(ensemble))?;
    Ok(BoseMmTotal {
        formula: 2.0 * PI * t.powi(4) / k2 * integral,
        order_estimate: ensemble.n_excited().powf(4.0 / 3.0) / k2,
    })
}

/// Smallest momentum transfer at which each channel's continuum formula holds.
pub fn delta_min(channel: Channel, temperature: f64) -> f64 {
    match channel {
        Channel::Rayleigh => 0.0,
        Channel::Diffraction | Channel::BoseMm => temperature.sqrt().recip(),
        Channel::Bose0m => 1.0,
    }
}

/// Shared numerical settings for semiclassical evaluations.
#[derive(Debug, Default)]
pub struct Evaluator {
    pub spec: QuadSpec,
    pub shapes: ShapeCache,
}

impl Evaluator {
    pub fn new(spec: QuadSpec, shapes: ShapeCache) -> Self {
        Evaluator { spec, shapes }
    }
}

/// All four channels at one momentum transfer.
///
/// Channels below their `delta_min` are reported as 0 with
/// [`Validity::OutOfRange`], except diffraction, whose condensate term stays
/// exact: there the excited amplitude is capped at `Ne` (its `delta -> 0`
/// value) and the channel is flagged [`Validity::Extrapolated`]. A channel
/// whose evaluation fails is reported as 0 with [`Validity::Failed`] and the
/// error text is kept in `failures`; the other channels are unaffected.
pub fn decompose(ensemble: &TrapEnsemble, kin: &Kinematics, eval: &Evaluator) -> Result<RateBreakdown> {
    let delta = kin.delta();
    check_delta(delta)?;
    let t = ensemble.temperature();
    let mut out = RateBreakdown::from_channels(rayleigh(ensemble).differential, 0.0, 0.0, 0.0);

    let record = |out: &mut RateBreakdown, channel: Channel, value: Result<f64>, flag: Validity| match value {
        Ok(v) => out.set(channel, v, flag),
        Err(e) => {
            out.set(channel, 0.0, Validity::Failed);
            out.failures.push(format!("{channel}: {e}"));
        }
    };

    let diffraction_flag = if delta >= delta_min(Channel::Diffraction, t) {
        Validity::Valid
    } else {
        Validity::Extrapolated
    };
    let diffraction = diffraction_excited_amplitude(ensemble, delta, &eval.spec).map(|excited| {
        let excited = match diffraction_flag {
            Validity::Valid => excited,
            _ => excited.min(ensemble.n_excited()),
        };
        let amp = ensemble.n_condensate() * (-0.25 * delta * delta).exp() + excited;
        amp * amp
    });
    record(&mut out, Channel::Diffraction, diffraction, diffraction_flag);

    if delta >= delta_min(Channel::Bose0m, t) {
        record(&mut out, Channel::Bose0m, bose_0m_differential(ensemble, delta), Validity::Valid);
    } else {
        out.set(Channel::Bose0m, 0.0, Validity::OutOfRange);
    }

    if delta >= delta_min(Channel::BoseMm, t) {
        record(
            &mut out,
            Channel::BoseMm,
            bose_mm_differential(ensemble, delta, &eval.shapes),
            Validity::Valid,
        );
    } else {
        out.set(Channel::BoseMm, 0.0, Validity::OutOfRange);
    }

    out.resum();
    Ok(out)
}
