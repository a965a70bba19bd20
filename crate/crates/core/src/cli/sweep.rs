//! CSV data behind the throughput and delay figures.

use std::io::Write;

use clap::ValueEnum;
use rayon::prelude::*;

use super::config::Config;
use super::CliError;
use crate::capacity::{effective_capacity, optimal_rate};
use crate::matching::{delay_violation, max_on_rate, solve_qos_exponent, DelaySpec};
use crate::qos::{db_to_linear, ChannelSpec, QosExponent, SourceShape};

pub const CSV_HELP: &str = "\
CSV columns (floats printed with 9 significant digits):
  fig3  ec,dtms,fms,mmps
        max average arrival rate vs effective capacity, P_ON = sweep.p_on (0.2)
  fig4  rate,ec,dtms,fms,mmps
        effective capacity and max average arrival rate vs rate in (0, sweep.rate_max]
  fig5  p_on,dtms_<g>db,fms_<g>db,mmps_<g>db,...  for g in sweep.snr_db (0,10,20)
        max ON-state rate vs P_ON at the optimal effective capacity
  fig6  panel,x,dtms,fms,mmps   panel is snr (x in dB), theta, or p_on
        delay-violation probability at threshold sweep.delay (2 blocks)

Sources use memoryless DTMS (p11 = 1 - P_ON, p22 = P_ON) and FMS/MMPS with
alpha + beta = 1, alpha = P_ON. theta is qos.theta (1) and the SNR is
channel.snr_db (10 dB) unless stated otherwise.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(&'static str),
    Num(f64),
}

impl Cell {
    pub fn num(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Text(s) => s.to_string(),
                Cell::Num(x) => format!("{x:.8e}"),
            }))
            .map_err(io)?;
        }
        w.flush().map_err(CliError::from)
    }

    /// Numeric column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[i].num()).collect()
    }
}

const SOURCES: [&str; 3] = ["dtms", "fms", "mmps"];

fn shapes(p_on: f64) -> [SourceShape; 3] {
    [SourceShape::dtms_with_p_on(p_on), SourceShape::fms_with_p_on(p_on), SourceShape::mmps_with_p_on(p_on)]
}

fn header(first: &[&str]) -> Vec<String> {
    first.iter().chain(SOURCES.iter()).map(|s| s.to_string()).collect()
}

/// Evenly spaced grid on (0, max], excluding 0.
fn open_grid(max: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| max * i as f64 / points as f64).collect()
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!("sweep.{name}: must be positive and finite, got {x}")))
    }
}

pub fn sweep(figure: Figure, config: &Config) -> Result<Table, CliError> {
    match figure {
        Figure::Fig3 => fig3(config),
        Figure::Fig4 => fig4(config),
        Figure::Fig5 => fig5(config),
        Figure::Fig6 => fig6(config),
    }
}

/// λ*_avg against effective capacity.
fn fig3(config: &Config) -> Result<Table, CliError> {
    let s = config.sweep();
    let theta = config.theta_or(1.0)?;
    let p_on = unit_interval("p_on", s.p_on.unwrap_or(0.2))?;
    let grid = open_grid(positive("ec_max", s.ec_max.unwrap_or(2.0))?, points(s.points.unwrap_or(40))?);
    let rows = grid
        .par_iter()
        .map(|&ec| {
            let mut row = vec![Cell::Num(ec)];
            for shape in shapes(p_on) {
                row.push(Cell::Num(p_on * max_on_rate(&shape, ec, theta)?));
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Table { header: header(&["ec"]), rows })
}

/// C_E and λ*_avg against the transmission rate.
fn fig4(config: &Config) -> Result<Table, CliError> {
    let s = config.sweep();
    let theta = config.theta_or(1.0)?;
    let snr = db_to_linear(config.snr_db_or(10.0)?);
    let p_on = unit_interval("p_on", s.p_on.unwrap_or(0.2))?;
    let grid = open_grid(positive("rate_max", s.rate_max.unwrap_or(8.0))?, points(s.points.unwrap_or(1000))?);
    let rows = grid
        .par_iter()
        .map(|&r| {
            let ec = effective_capacity(&ChannelSpec::new(snr, r)?, theta);
            let mut row = vec![Cell::Num(r), Cell::Num(ec)];
            for shape in shapes(p_on) {
                row.push(Cell::Num(p_on * max_on_rate(&shape, ec, theta)?));
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Table { header: header(&["rate", "ec"]), rows })
}

/// λ*_on against P_ON at C_E*(γ, θ), one column per source and SNR.
fn fig5(config: &Config) -> Result<Table, CliError> {
    let s = config.sweep();
    let theta = config.theta_or(1.0)?;
    let snrs_db = s.snr_db.unwrap_or_else(|| vec![0.0, 10.0, 20.0]);
    let mut header = vec!["p_on".to_string()];
    let mut ec_stars = Vec::new();
    for &db in &snrs_db {
        if !db.is_finite() {
            return Err(CliError::Config(format!("sweep.snr_db: must be finite, got {db}")));
        }
        ec_stars.push(optimal_rate(db_to_linear(db), theta)?.ec_star);
        header.extend(SOURCES.iter().map(|src| format!("{src}_{db}db")));
    }
    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let rows = grid
        .par_iter()
        .map(|&p_on| {
            let mut row = vec![Cell::Num(p_on)];
            for &ec in &ec_stars {
                for shape in shapes(p_on) {
                    row.push(Cell::Num(max_on_rate(&shape, ec, theta)?));
                }
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Table { header, rows })
}

/// Delay-violation probability against SNR, θ and P_ON.
///
/// * `snr`: fixed λ_avg and P_ON, link at its optimal rate for θ, each
///   source at its own operating exponent θ*.
/// * `theta`: the source runs at its largest supportable rate, so
///   a(θ) = C_E*(θ) and the bound ζ·e^{−θ·C_E*(θ)·d} is the same for all
///   three models.
/// * `p_on`: fixed λ_avg with λ_on = λ_avg/P_ON, operating exponent θ*.
fn fig6(config: &Config) -> Result<Table, CliError> {
    let s = config.sweep();
    let theta = config.theta_or(1.0)?;
    let base_db = config.snr_db_or(10.0)?;
    let lambda_avg = positive("lambda_avg", s.lambda_avg.unwrap_or(1.0))?;
    let p_on = unit_interval("p_on", s.p_on.unwrap_or(0.5))?;
    let default_d = config.delay.as_ref().and_then(|d| d.thresholds.first().copied()).unwrap_or(2.0);
    let delay = DelaySpec::new(s.delay.unwrap_or(default_d), config.delay_zeta())?;

    let at_operating_point = |snr: f64, p_on: f64| -> Result<Vec<Cell>, CliError> {
        let r = optimal_rate(snr, theta)?.r_star;
        let channel = ChannelSpec::new(snr, r)?;
        shapes(p_on)
            .iter()
            .map(|shape| {
                let source = shape.with_lambda_on(lambda_avg / p_on)?;
                let op = solve_qos_exponent(&source, &channel)?;
                Ok(Cell::Num(delay_violation(op.theta_star, op.effective_bandwidth, &delay)))
            })
            .collect()
    };

    let mut points: Vec<(&'static str, f64)> = Vec::new();
    points.extend((0..=20).map(|i| ("snr", 10.0 + i as f64)));
    points.extend((1..=30).map(|i| ("theta", 0.1 * i as f64)));
    points.extend((2..=19).map(|i| ("p_on", 0.05 * i as f64)));

    let base_snr = db_to_linear(base_db);
    let rows = points
        .par_iter()
        .map(|&(panel, x)| {
            let values = match panel {
                "snr" => at_operating_point(db_to_linear(x), p_on)?,
                "theta" => {
                    let ec_star = optimal_rate(base_snr, QosExponent::new(x)?)?.ec_star;
                    vec![Cell::Num(delay_violation(x, ec_star, &delay)); 3]
                }
                _ => at_operating_point(base_snr, x)?,
            };
            let mut row = vec![Cell::Text(panel), Cell::Num(x)];
            row.extend(values);
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Table { header: header(&["panel", "x"]), rows })
}

fn unit_interval(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!("sweep.{name}: must lie in (0, 1], got {x}")))
    }
}

fn points(n: usize) -> Result<usize, CliError> {
    if n >= 2 {
        Ok(n)
    } else {
        Err(CliError::Config(format!("sweep.points: need at least 2, got {n}")))
    }
}
