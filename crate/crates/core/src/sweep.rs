//! Parameter sweeps behind the command-line tool: configuration, row
//! evaluation and table rendering (CSV or JSON).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{
    default_epsilon_max, exact_breakdown, scaling_probe, solve_mu_discrete, DeltaRule, ScalingFit, ORACLE_MAX_N,
};
use crate::quad::QuadSpec;
use crate::scattering::{decompose, Channel, Evaluator, Kinematics, RateBreakdown, Validity};
use crate::thermo::{critical_temperature, TrapEnsemble};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "TRAPSCATTER_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureSpec {
    Absolute(f64),
    Reduced(f64),
}

impl TemperatureSpec {
    pub fn resolve(&self, n_total: u64) -> f64 {
        match *self {
            TemperatureSpec::Absolute(t) => t,
            TemperatureSpec::Reduced(r) => r * critical_temperature(n_total),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Semiclassical,
    Oracle,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semiclassical" => Ok(Method::Semiclassical),
            "oracle" => Ok(Method::Oracle),
            "both" => Ok(Method::Both),
            _ => Err(Error::config("method", format!("expected semiclassical, oracle or both, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::config("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

/// Evenly spaced grid, linear or logarithmic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log: bool,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / last;
                if i + 1 == self.points {
                    self.hi
                } else if self.log {
                    (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + f * (self.hi - self.lo)
                }
            })
            .collect()
    }

    fn validate(&self, lo_field: &str, hi_field: &str) -> Result<()> {
        if !(self.lo > 0.0) || !self.lo.is_finite() {
            return Err(Error::config(lo_field, format!("must be positive, got {}", self.lo)));
        }
        if !(self.hi > self.lo) || !self.hi.is_finite() {
            return Err(Error::config(hi_field, format!("must exceed {lo_field} = {}, got {}", self.lo, self.hi)));
        }
        if self.points < 2 {
            return Err(Error::config("points", format!("need at least 2 points, got {}", self.points)));
        }
        Ok(())
    }
}

/// Fully resolved sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub n_total: u64,
    /// Absent for temperature sweeps, which use `t_grid`.
    pub t_spec: Option<TemperatureSpec>,
    pub k_incident: f64,
    /// Momentum-transfer grid for angle sweeps and comparisons.
    pub grid: Grid,
    /// `T/Tc` grid for temperature sweeps.
    pub t_grid: Grid,
    /// Fixed momentum transfer for temperature sweeps.
    pub delta_fixed: Option<f64>,
    pub method: Method,
    pub epsilon_max: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Particle numbers for scaling fits in comparisons.
    pub probe_n: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SweepAngle,
    SweepTemp,
    OracleCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepAngle => "sweep-angle",
            Command::SweepTemp => "sweep-temp",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

/// Unresolved settings from a config file and/or flags. Every field is
/// optional; [`RawConfig::overlay`] lets flags win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub n: Option<u64>,
    pub t: Option<f64>,
    pub t_over_tc: Option<f64>,
    pub k_incident: Option<f64>,
    pub delta_lo: Option<f64>,
    pub delta_hi: Option<f64>,
    pub points: Option<usize>,
    pub log: Option<bool>,
    pub method: Option<String>,
    pub epsilon_max: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub t_over_tc_lo: Option<f64>,
    pub t_over_tc_hi: Option<f64>,
    pub delta: Option<f64>,
    pub probe_n: Option<Vec<u64>>,
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{value}`"))),
    }
}

/// Parses a comma-separated list of particle numbers.
pub fn parse_count_list(key: &str, value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(|v| parse_field::<u64>(key, v.trim()))
        .collect()
}

impl RawConfig {
    /// Reads `key = value` lines; `#` starts a comment. Keys are the long flag
    /// names with `_` or `-` separators.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config("config", format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "n" => raw.n = Some(parse_field(&key, value)?),
                "t" => raw.t = Some(parse_field(&key, value)?),
                "t_over_tc" => raw.t_over_tc = Some(parse_field(&key, value)?),
                "k_incident" => raw.k_incident = Some(parse_field(&key, value)?),
                "delta_lo" => raw.delta_lo = Some(parse_field(&key, value)?),
                "delta_hi" => raw.delta_hi = Some(parse_field(&key, value)?),
                "points" => raw.points = Some(parse_field(&key, value)?),
                "log" => raw.log = Some(parse_bool(&key, value)?),
                "method" => raw.method = Some(value.to_string()),
                "epsilon_max" => raw.epsilon_max = Some(parse_field(&key, value)?),
                "out" => raw.out = Some(PathBuf::from(value)),
                "format" => raw.format = Some(value.to_string()),
                "t_over_tc_lo" => raw.t_over_tc_lo = Some(parse_field(&key, value)?),
                "t_over_tc_hi" => raw.t_over_tc_hi = Some(parse_field(&key, value)?),
                "delta" => raw.delta = Some(parse_field(&key, value)?),
                "probe_n" => raw.probe_n = Some(parse_count_list(&key, value)?),
                other => return Err(Error::config(other, "unknown configuration key")),
            }
        }
        Ok(raw)
    }

    /// Fields set in `top` replace those in `self`. Setting either
    /// temperature form in `top` clears the other one from `self`.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        let (t, t_over_tc) = if top.t.is_some() || top.t_over_tc.is_some() {
            (top.t, top.t_over_tc)
        } else {
            (self.t, self.t_over_tc)
        };
        RawConfig {
            n: top.n.or(self.n),
            t,
            t_over_tc,
            k_incident: top.k_incident.or(self.k_incident),
            delta_lo: top.delta_lo.or(self.delta_lo),
            delta_hi: top.delta_hi.or(self.delta_hi),
            points: top.points.or(self.points),
            log: top.log.or(self.log),
            method: top.method.or(self.method),
            epsilon_max: top.epsilon_max.or(self.epsilon_max),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            t_over_tc_lo: top.t_over_tc_lo.or(self.t_over_tc_lo),
            t_over_tc_hi: top.t_over_tc_hi.or(self.t_over_tc_hi),
            delta: top.delta.or(self.delta),
            probe_n: top.probe_n.or(self.probe_n),
        }
    }

    /// Applies defaults and validates for `command`.
    pub fn resolve(&self, command: Command) -> Result<SweepConfig> {
        let n_total = self.n.ok_or_else(|| Error::config("n", "particle number is required"))?;
        if n_total == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        let t_spec = match (self.t, self.t_over_tc) {
            (Some(_), Some(_)) => return Err(Error::config("t", "give either t or t_over_tc, not both")),
            (Some(t), None) => Some(TemperatureSpec::Absolute(t)),
            (None, Some(r)) => Some(TemperatureSpec::Reduced(r)),
            (None, None) => None,
        };
        if command != Command::SweepTemp && t_spec.is_none() {
            return Err(Error::config("t", "a temperature (t or t_over_tc) is required"));
        }
        if let Some(spec) = t_spec {
            let (field, v) = match spec {
                TemperatureSpec::Absolute(t) => ("t", t),
                TemperatureSpec::Reduced(r) => ("t_over_tc", r),
            };
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        let k_incident = self.k_incident.unwrap_or(1000.0);
        if !(k_incident > 0.0) || !k_incident.is_finite() {
            return Err(Error::config("k_incident", format!("must be positive, got {k_incident}")));
        }
        let points = self.points.unwrap_or(200);
        let grid = Grid {
            lo: self.delta_lo.unwrap_or(0.05),
            hi: self.delta_hi.unwrap_or(30.0),
            points,
            log: self.log.unwrap_or(false),
        };
        let t_grid = Grid {
            lo: self.t_over_tc_lo.unwrap_or(0.2),
            hi: self.t_over_tc_hi.unwrap_or(1.4),
            points,
            log: self.log.unwrap_or(false),
        };
        match command {
            Command::SweepTemp => t_grid.validate("t_over_tc_lo", "t_over_tc_hi")?,
            _ => {
                grid.validate("delta_lo", "delta_hi")?;
                if grid.hi > 2.0 * k_incident {
                    return Err(Error::config(
                        "delta_hi",
                        format!("exceeds the backscattering limit 2 k_incident = {}", 2.0 * k_incident),
                    ));
                }
            }
        }
        let delta_fixed = self.delta;
        if command == Command::SweepTemp {
            let d = delta_fixed.ok_or_else(|| Error::config("delta", "sweep-temp needs a fixed delta"))?;
            if !(d > 0.0) || !d.is_finite() || d > 2.0 * k_incident {
                return Err(Error::config("delta", format!("must lie in (0, 2 k_incident], got {d}")));
            }
        }
        let method = match &self.method {
            Some(m) => m.parse()?,
            None if command == Command::OracleCompare => Method::Both,
            None => Method::Semiclassical,
        };
        if command == Command::OracleCompare && method != Method::Both {
            return Err(Error::config("method", "oracle-compare runs both methods"));
        }
        if method != Method::Semiclassical && n_total > ORACLE_MAX_N {
            return Err(Error::config(
                "method",
                format!("the oracle accepts N <= {ORACLE_MAX_N}, got N = {n_total}"),
            ));
        }
        let format = match &self.format {
            Some(f) => f.parse()?,
            None if command == Command::OracleCompare => OutputFormat::Json,
            None => OutputFormat::Csv,
        };
        let probe_n = self.probe_n.clone().unwrap_or_else(|| vec![300, 1000, 3000]);
        if command == Command::OracleCompare {
            if probe_n.len() < 3 {
                return Err(Error::config("probe_n", "need at least 3 particle numbers"));
            }
            let lo = probe_n.iter().min().copied().unwrap_or(0);
            let hi = probe_n.iter().max().copied().unwrap_or(0);
            if lo == 0 || hi < 10 * lo || hi > ORACLE_MAX_N {
                return Err(Error::config(
                    "probe_n",
                    format!("must span at least one decade within [1, {ORACLE_MAX_N}]"),
                ));
            }
        }
        Ok(SweepConfig {
            n_total,
            t_spec,
            k_incident,
            grid,
            t_grid,
            delta_fixed,
            method,
            epsilon_max: self.epsilon_max,
            output: self.out.clone(),
            format,
            probe_n,
        })
    }
}

impl SweepConfig {
    /// Temperature of angle sweeps and comparisons.
    pub fn temperature(&self) -> Result<f64> {
        self.t_spec
            .map(|s| s.resolve(self.n_total))
            .ok_or_else(|| Error::config("t", "no temperature configured"))
    }

    fn oracle_ensemble(&self, n: u64, t: f64) -> Result<crate::oracle::DiscreteEnsemble> {
        let eps = self.epsilon_max.unwrap_or_else(|| default_epsilon_max(t));
        solve_mu_discrete(n, t, eps)
    }

    fn uses_semiclassical(&self) -> bool {
        self.method != Method::Oracle
    }

    fn uses_oracle(&self) -> bool {
        self.method != Method::Semiclassical
    }
}

/// C-style `%.10e`: ten mantissa digits, signed exponent with at least two
/// digits.
pub fn format_sci(value: f64) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let raw = format!("{value:.10e}");
    let (mantissa, exponent) = raw.split_once('e').unwrap_or((&raw, "0"));
    let exp: i32 = exponent.parse().unwrap_or(0);
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Channel values with validity flags, as written to one table cell group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSet {
    pub rayleigh: f64,
    pub diffraction: f64,
    pub bose_0m: f64,
    pub bose_mm: f64,
    pub total: f64,
    pub flags: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl From<&RateBreakdown> for ChannelSet {
    fn from(b: &RateBreakdown) -> Self {
        ChannelSet {
            rayleigh: b.rayleigh,
            diffraction: b.diffraction,
            bose_0m: b.bose_0m,
            bose_mm: b.bose_mm,
            total: b.total,
            flags: b.flag_string(),
            failures: b.failures.clone(),
        }
    }
}

impl ChannelSet {
    fn failed(message: String) -> Self {
        let failed = Validity::Failed.code().to_string().repeat(4);
        ChannelSet {
            rayleigh: 0.0,
            diffraction: 0.0,
            bose_0m: 0.0,
            bose_mm: 0.0,
            total: 0.0,
            flags: failed,
            failures: vec![message],
        }
    }

    fn has_failure(&self) -> bool {
        self.flags.contains(Validity::Failed.code())
    }

    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Rayleigh => self.rayleigh,
            Channel::Diffraction => self.diffraction,
            Channel::Bose0m => self.bose_0m,
            Channel::BoseMm => self.bose_mm,
        }
    }

    pub fn flag(&self, channel: Channel) -> char {
        self.flags.chars().nth(channel as usize).unwrap_or('F')
    }
}

fn breakdown_or_failure(r: Result<RateBreakdown>) -> ChannelSet {
    match r {
        Ok(b) => ChannelSet::from(&b),
        Err(e) => ChannelSet::failed(e.to_string()),
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Leading scalar columns (`delta, theta` or `t, t_over_tc, mu, n0, ne`).
    pub keys: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semiclassical: Option<ChannelSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<ChannelSet>,
}

impl SweepRow {
    pub fn has_failure(&self) -> bool {
        self.semiclassical.as_ref().is_some_and(ChannelSet::has_failure)
            || self.oracle.as_ref().is_some_and(ChannelSet::has_failure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub command: Command,
    pub key_columns: Vec<String>,
    pub method: Method,
    pub rows: Vec<SweepRow>,
}

const CHANNEL_COLUMNS: [&str; 6] = ["rayleigh", "diffraction", "bose_0m", "bose_mm", "total", "flags"];

impl SweepTable {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.has_failure()).count()
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols = self.key_columns.clone();
        for c in CHANNEL_COLUMNS {
            match self.method {
                Method::Both => {
                    cols.push(format!("{c}_sc"));
                    cols.push(format!("{c}_oracle"));
                }
                _ => cols.push(c.to_string()),
            }
        }
        cols
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells: Vec<String> = row.keys.iter().map(|v| format_sci(*v)).collect();
            let sets: Vec<&ChannelSet> = [row.semiclassical.as_ref(), row.oracle.as_ref()].into_iter().flatten().collect();
            for c in CHANNEL_COLUMNS {
                for set in &sets {
                    cells.push(match c {
                        "rayleigh" => format_sci(set.rayleigh),
                        "diffraction" => format_sci(set.diffraction),
                        "bose_0m" => format_sci(set.bose_0m),
                        "bose_mm" => format_sci(set.bose_mm),
                        "total" => format_sci(set.total),
                        _ => set.flags.clone(),
                    });
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &SweepConfig) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            metadata: Metadata<'a>,
            columns: Vec<String>,
            rows: &'a [SweepRow],
        }
        let doc = Doc {
            metadata: Metadata::new(self.command, config),
            columns: self.header(),
            rows: &self.rows,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))
    }

    pub fn render(&self, config: &SweepConfig) -> Result<String> {
        match config.format {
            OutputFormat::Csv => Ok(self.to_csv()),
            OutputFormat::Json => self.to_json(config).map(|mut s| {
                s.push('\n');
                s
            }),
        }
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a SweepConfig,
}

impl<'a> Metadata<'a> {
    fn new(command: Command, config: &'a SweepConfig) -> Self {
        Metadata {
            tool: "trapscatter",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            config,
        }
    }
}

/// Default semiclassical evaluator used by the sweeps.
pub fn default_evaluator() -> Evaluator {
    Evaluator::new(QuadSpec::default(), Default::default())
}

/// One row per momentum transfer: `delta, theta`, then the channels.
pub fn sweep_angle(config: &SweepConfig, eval: &Evaluator) -> Result<SweepTable> {
    let t = config.temperature()?;
    let semi = if config.uses_semiclassical() {
        Some(TrapEnsemble::new(config.n_total, t).map_err(|e| Error::config("t", e.to_string()))?)
    } else {
        None
    };
    let oracle = if config.uses_oracle() {
        Some(config.oracle_ensemble(config.n_total, t).map_err(|e| Error::config("epsilon_max", e.to_string()))?)
    } else {
        None
    };
    let deltas = config.grid.values();
    let rows = deltas
        .par_iter()
        .map(|&delta| {
            let kin = Kinematics::new(config.k_incident, delta);
            let semiclassical = semi.as_ref().map(|ens| {
                breakdown_or_failure(kin.clone().and_then(|k| decompose(ens, &k, eval)))
            });
            let oracle = oracle.as_ref().map(|ens| breakdown_or_failure(exact_breakdown(ens, delta)));
            SweepRow {
                keys: vec![delta, delta / config.k_incident],
                semiclassical,
                oracle,
            }
        })
        .collect();
    Ok(SweepTable {
        command: Command::SweepAngle,
        key_columns: vec!["delta".into(), "theta".into()],
        method: config.method,
        rows,
    })
}

/// One row per `T/Tc` at the fixed momentum transfer: `t, t_over_tc, mu, n0,
/// ne`, then the channels. With both methods the thermodynamic columns are
/// the semiclassical ones.
pub fn sweep_temperature(config: &SweepConfig, eval: &Evaluator) -> Result<SweepTable> {
    let delta = config
        .delta_fixed
        .ok_or_else(|| Error::config("delta", "sweep-temp needs a fixed delta"))?;
    let tc = critical_temperature(config.n_total);
    let n = config.n_total as f64;
    let ratios = config.t_grid.values();
    let rows = ratios
        .par_iter()
        .map(|&ratio| {
            let t = ratio * tc;
            let mut keys = vec![t, ratio, f64::NAN, f64::NAN, f64::NAN];
            let semiclassical = config.uses_semiclassical().then(|| {
                breakdown_or_failure(TrapEnsemble::new(config.n_total, t).and_then(|ens| {
                    keys[2] = ens.mu();
                    keys[3] = ens.n_condensate();
                    keys[4] = ens.n_excited();
                    decompose(&ens, &Kinematics::new(config.k_incident, delta)?, eval)
                }))
            });
            let oracle = config.uses_oracle().then(|| {
                breakdown_or_failure(config.oracle_ensemble(config.n_total, t).and_then(|ens| {
                    if !config.uses_semiclassical() {
                        keys[2] = ens.mu_exact();
                        keys[3] = ens.n0_exact();
                        keys[4] = n - ens.n0_exact();
                    }
                    exact_breakdown(&ens, delta)
                }))
            });
            SweepRow {
                keys,
                semiclassical,
                oracle,
            }
        })
        .collect();
    Ok(SweepTable {
        command: Command::SweepTemp,
        key_columns: ["t", "t_over_tc", "mu", "n0", "ne"].map(String::from).to_vec(),
        method: config.method,
        rows,
    })
}

/// Relative deviation `|semiclassical - oracle| / oracle` statistics for one
/// channel over the grid points where both sides are valid and positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationStats {
    pub channel: Channel,
    pub samples: usize,
    pub max: Option<f64>,
    pub median: Option<f64>,
}

/// Deviation per channel at one probe size, at `delta = match_ratio sqrt(T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub n_total: u64,
    pub delta: f64,
    pub deviation: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub deviations: Vec<DeviationStats>,
    pub scaling: Vec<ScalingFit>,
    pub convergence: Vec<ConvergencePoint>,
    pub table: SweepTable,
}

/// `delta / sqrt(T)` at which convergence points are evaluated.
pub const CONVERGENCE_MATCH_RATIO: f64 = 0.5;

/// Momentum transfer at which each channel's scaling exponent is fitted.
pub fn scaling_rule(channel: Channel) -> DeltaRule {
    match channel {
        Channel::Diffraction => DeltaRule::Fixed(0.5),
        _ => DeltaRule::Fixed(1.0),
    }
}

fn relative_deviation(semi: &ChannelSet, oracle: &ChannelSet, channel: Channel) -> Option<f64> {
    let (s, o) = (semi.get(channel), oracle.get(channel));
    (semi.flag(channel) == Validity::Valid.code() && oracle.flag(channel) == Validity::Valid.code() && o > 0.0)
        .then(|| (s - o).abs() / o)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

/// Semiclassical vs oracle over the grid, oracle scaling fits over
/// `probe_n`, and per-N deviations at a matched `delta / sqrt(T)`.
pub fn oracle_compare(config: &SweepConfig, eval: &Evaluator) -> Result<ComparisonReport> {
    let mut both = config.clone();
    both.method = Method::Both;
    let table = sweep_angle(&both, eval)?;

    let deviations = Channel::ALL
        .iter()
        .map(|&channel| {
            let devs: Vec<f64> = table
                .rows
                .iter()
                .filter_map(|r| relative_deviation(r.semiclassical.as_ref()?, r.oracle.as_ref()?, channel))
                .collect();
            DeviationStats {
                channel,
                samples: devs.len(),
                max: devs.iter().copied().reduce(f64::max),
                median: median(devs),
            }
        })
        .collect();

    let ratio = match config.t_spec {
        Some(TemperatureSpec::Reduced(r)) => r,
        Some(TemperatureSpec::Absolute(t)) => t / critical_temperature(config.n_total),
        None => return Err(Error::config("t", "no temperature configured")),
    };
    let scaling = Channel::ALL
        .par_iter()
        .map(|&channel| scaling_probe(channel, &config.probe_n, ratio, scaling_rule(channel)))
        .collect::<Result<Vec<_>>>()?;

    let convergence = config
        .probe_n
        .par_iter()
        .map(|&n| -> Result<ConvergencePoint> {
            let t = ratio * critical_temperature(n);
            let delta = CONVERGENCE_MATCH_RATIO * t.sqrt();
            let semi = ChannelSet::from(&decompose(
                &TrapEnsemble::new(n, t)?,
                &Kinematics::new(config.k_incident, delta)?,
                eval,
            )?);
            let exact = ChannelSet::from(&exact_breakdown(&config.oracle_ensemble(n, t)?, delta)?);
            let deviation = Channel::ALL
                .iter()
                .map(|&c| (c.name().to_string(), relative_deviation(&semi, &exact, c)))
                .collect();
            Ok(ConvergencePoint {
                n_total: n,
                delta,
                deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonReport {
        deviations,
        scaling,
        convergence,
        table,
    })
}

impl ComparisonReport {
    pub fn to_json(&self, config: &SweepConfig) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            metadata: Metadata<'a>,
            deviations: &'a [DeviationStats],
            scaling: &'a [ScalingFit],
            convergence: &'a [ConvergencePoint],
            columns: Vec<String>,
            rows: &'a [SweepRow],
        }
        let doc = Doc {
            metadata: Metadata::new(Command::OracleCompare, config),
            deviations: &self.deviations,
            scaling: &self.scaling,
            convergence: &self.convergence,
            columns: self.table.header(),
            rows: &self.table.rows,
        };
        let mut s =
            serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    /// CSV rendering: the paired table, then one `# channel,...` summary line
    /// per channel.
    pub fn to_csv(&self) -> String {
        let mut out = self.table.to_csv();
        for d in &self.deviations {
            let fit = self.scaling.iter().find(|f| f.channel == d.channel);
            let _ = writeln!(
                out,
                "# {},samples={},max={},median={},exponent={}",
                d.channel,
                d.samples,
                d.max.map_or("na".into(), format_sci),
                d.median.map_or("na".into(), format_sci),
                fit.map_or("na".into(), |f| format_sci(f.slope)),
            );
        }
        out
    }

    pub fn render(&self, config: &SweepConfig) -> Result<String> {
        match config.format {
            OutputFormat::Csv => Ok(self.to_csv()),
            OutputFormat::Json => self.to_json(config),
        }
    }

    pub fn failed_rows(&self) -> usize {
        self.table.failed_rows()
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
    }
}

/// Runs `f` on a pool of `workers` threads (rayon's default when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
