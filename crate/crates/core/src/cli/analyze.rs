//! Closed-form link report.

use serde::Serialize;

use super::config::Config;
use super::CliError;
use crate::bandwidth::effective_bandwidth;
use crate::capacity::effective_capacity;
use crate::matching::{delay_violation, solve_qos_exponent, supportable_at, OperatingPoint, SupportableRate};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkReport {
    pub theta: f64,
    pub source: SourceReport,
    pub channel: ChannelReport,
    /// a(θ) of the configured source.
    pub effective_bandwidth: f64,
    /// C_E(θ) at the operating rate.
    pub effective_capacity: f64,
    pub r_star: f64,
    pub ec_star: f64,
    /// Largest ON/average rates of this source shape at C_E*.
    pub supportable: SupportableRate,
    /// Exponent at which the configured source meets the channel.
    pub operating_point: OperatingPoint,
    pub delay: Vec<DelayReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceReport {
    pub model: &'static str,
    pub p_on: f64,
    pub lambda_on: f64,
    pub lambda_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub snr_db: f64,
    pub snr: f64,
    pub rate: f64,
    pub on_probability: f64,
    pub mean_service: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub d: f64,
    pub zeta: f64,
    /// ζ·e^{−θ*·a(θ*)·d} at the operating point.
    pub violation: f64,
}

pub fn analyze(config: &Config) -> Result<LinkReport, CliError> {
    let link = config.link()?;
    let theta = link.theta;
    let steady = link.source.steady_state()?;
    let operating_point = solve_qos_exponent(&link.source, &link.channel)?;
    let delay = link
        .delays
        .iter()
        .map(|spec| DelayReport {
            d: spec.d(),
            zeta: spec.zeta(),
            violation: delay_violation(operating_point.theta_star, operating_point.effective_bandwidth, spec),
        })
        .collect();
    Ok(LinkReport {
        theta: theta.get(),
        source: SourceReport {
            model: link.source.name(),
            p_on: steady.p_on,
            lambda_on: link.source.lambda_on(),
            lambda_avg: steady.lambda_avg,
        },
        channel: ChannelReport {
            snr_db: link.snr_db,
            snr: link.channel.snr(),
            rate: link.channel.rate(),
            on_probability: link.channel.on_probability(),
            mean_service: link.channel.mean_service(),
        },
        effective_bandwidth: effective_bandwidth(&link.source, theta)?,
        effective_capacity: effective_capacity(&link.channel, theta),
        r_star: link.optimum.r_star,
        ec_star: link.optimum.ec_star,
        supportable: supportable_at(&link.shape, link.optimum.ec_star, theta)?,
        operating_point,
        delay,
    })
}
