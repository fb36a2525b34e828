//! Command-line front end for light-scattering sweeps off trapped Bose gases.
//!
//! Exit codes: 0 success, 1 runtime error, 2 invalid configuration,
//! 3 output written but at least one row failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trapscatter::sweep::{
    default_evaluator, oracle_compare, sweep_angle, sweep_temperature, with_workers, workers_from_env,
    Command, RawConfig,
};
use trapscatter::Error;

#[derive(Parser)]
#[command(name = "trapscatter", version, about = "Light scattering rates off a harmonically trapped ideal Bose gas")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rates against momentum transfer at fixed temperature.
    SweepAngle(Common),
    /// Rates against T/Tc at fixed momentum transfer.
    SweepTemp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_over_tc_lo: Option<f64>,
        #[arg(long)]
        t_over_tc_hi: Option<f64>,
        /// Fixed momentum transfer (trap units).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Semiclassical rates against the exact discrete sums.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated particle numbers for the scaling fits.
        #[arg(long, value_delimiter = ',')]
        probe_n: Option<Vec<u64>>,
    },
}

#[derive(Args)]
struct Common {
    /// Total atom number.
    #[arg(long)]
    n: Option<u64>,
    /// Absolute temperature in units of the trap quantum.
    #[arg(long, conflicts_with = "t_over_tc")]
    t: Option<f64>,
    #[arg(long)]
    t_over_tc: Option<f64>,
    /// Incident wavenumber in inverse oscillator lengths.
    #[arg(long)]
    k_incident: Option<f64>,
    #[arg(long)]
    delta_lo: Option<f64>,
    #[arg(long)]
    delta_hi: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Logarithmic grid spacing.
    #[arg(long)]
    log: bool,
    /// semiclassical, oracle or both.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    epsilon_max: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn raw(&self) -> RawConfig {
        RawConfig {
            n: self.n,
            t: self.t,
            t_over_tc: self.t_over_tc,
            k_incident: self.k_incident,
            delta_lo: self.delta_lo,
            delta_hi: self.delta_hi,
            points: self.points,
            log: self.log.then_some(true),
            method: self.method.clone(),
            epsilon_max: self.epsilon_max,
            out: self.out.clone(),
            format: self.format.clone(),
            ..Default::default()
        }
    }
}

enum Failure {
    Config(Error),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(common: &Common, flags: RawConfig, command: Command) -> Result<trapscatter::sweep::SweepConfig, Failure> {
    let base = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::from_kv_text(&text)?
        }
        None => RawConfig::default(),
    };
    Ok(base.overlay(flags).resolve(command)?)
}

fn run(cli: Cli) -> Result<usize, Failure> {
    let workers = workers_from_env()?;
    let (command, common, extra) = match &cli.command {
        Cmd::SweepAngle(c) => (Command::SweepAngle, c, RawConfig::default()),
        Cmd::SweepTemp {
            common,
            t_over_tc_lo,
            t_over_tc_hi,
            delta,
        } => (
            Command::SweepTemp,
            common,
            RawConfig {
                t_over_tc_lo: *t_over_tc_lo,
                t_over_tc_hi: *t_over_tc_hi,
                delta: *delta,
                ..Default::default()
            },
        ),
        Cmd::OracleCompare { common, probe_n } => (
            Command::OracleCompare,
            common,
            RawConfig {
                probe_n: probe_n.clone(),
                ..Default::default()
            },
        ),
    };
    let flags = extra.overlay(common.raw());
    let config = load(common, flags, command)?;
    let eval = default_evaluator();

    let (text, failed) = with_workers(workers, || -> Result<(String, usize), Error> {
        Ok(match command {
            Command::SweepAngle => {
                let table = sweep_angle(&config, &eval)?;
                (table.render(&config)?, table.failed_rows())
            }
            Command::SweepTemp => {
                let table = sweep_temperature(&config, &eval)?;
                (table.render(&config)?, table.failed_rows())
            }
            Command::OracleCompare => {
                let report = oracle_compare(&config, &eval)?;
                (report.render(&config)?, report.failed_rows())
            }
        })
    })??;

    match &config.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("trapscatter: {failed} row(s) contain failed channels (flag F)");
            ExitCode::from(3)
        }
        Err(Failure::Config(e)) => {
            eprintln!("trapscatter: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("trapscatter: {msg}");
            ExitCode::from(1)
        }
    }
}
