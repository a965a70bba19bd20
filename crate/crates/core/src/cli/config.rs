//! JSON run configuration.
//!
//! One document with optional sections `source`, `channel`, `qos`, `delay`,
//! `sweep` and `sim`. Unknown keys anywhere are rejected so that a misspelt
//! field (or a unit suffix such as `snr` instead of `snr_db`) fails loudly.
//! SNR is given in dB here and converted exactly once.

use std::path::Path;

use serde::Deserialize;

use super::CliError;
use crate::capacity::{effective_capacity, optimal_rate, RateOptimum};
use crate::error::Error;
use crate::matching::{max_on_rate, DelaySpec};
use crate::qos::{ChannelSpec, QosExponent, SourceModel, SourceShape};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub source: Option<SourceConfig>,
    pub channel: Option<ChannelConfig>,
    pub qos: Option<QosConfig>,
    pub delay: Option<DelayConfig>,
    pub sweep: Option<SweepConfig>,
    pub sim: Option<SimSection>,
}

/// Source section. `lambda_on` may be omitted, in which case the source is
/// run at the largest ON rate the link supports at the configured θ.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceConfig {
    Dtms { p11: f64, p22: f64, lambda_on: Option<f64> },
    Fms { alpha: f64, beta: f64, lambda_on: Option<f64> },
    Mmps { alpha: f64, beta: f64, lambda_on: Option<f64> },
}

impl SourceConfig {
    pub fn shape(&self) -> SourceShape {
        match *self {
            SourceConfig::Dtms { p11, p22, .. } => SourceShape::Dtms { p11, p22 },
            SourceConfig::Fms { alpha, beta, .. } => SourceShape::Fms { alpha, beta },
            SourceConfig::Mmps { alpha, beta, .. } => SourceShape::Mmps { alpha, beta },
        }
    }

    pub fn lambda_on(&self) -> Option<f64> {
        match *self {
            SourceConfig::Dtms { lambda_on, .. }
            | SourceConfig::Fms { lambda_on, .. }
            | SourceConfig::Mmps { lambda_on, .. } => lambda_on,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub snr_db: f64,
    /// Fixed transmission rate (bits/block); the C_E-maximizing rate if absent.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosConfig {
    pub theta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    /// Delay thresholds in blocks.
    #[serde(default)]
    pub thresholds: Vec<f64>,
    /// Probability of a nonempty buffer; 1 (a conservative bound) if absent.
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// ON probability for fig3 and the fig6 SNR panel.
    pub p_on: Option<f64>,
    /// Grid size for fig3 and fig4.
    pub points: Option<usize>,
    /// Upper end of the fig3 effective-capacity axis.
    pub ec_max: Option<f64>,
    /// Upper end of the fig4 rate axis.
    pub rate_max: Option<f64>,
    /// SNR values (dB) of the fig5 curves.
    pub snr_db: Option<Vec<f64>>,
    /// Average arrival rate held fixed in fig6.
    pub lambda_avg: Option<f64>,
    /// Delay threshold (blocks) used in fig6.
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_blocks: usize,
    pub n_replications: usize,
    pub warmup_blocks: usize,
    /// Window length for the MGF estimators before adaptive shortening.
    pub horizon: usize,
    /// Independent windows per MGF estimate.
    pub mgf_replications: usize,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            n_blocks: 2_000_000,
            n_replications: 4,
            warmup_blocks: 1_000,
            horizon: 200,
            mgf_replications: 10_000,
            seed: 0,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn theta(&self) -> Result<QosExponent, CliError> {
        let theta = self.qos.as_ref().ok_or_else(|| missing("qos"))?.theta;
        QosExponent::new(theta).map_err(|e| in_section("qos", e))
    }

    /// θ if configured, otherwise `default`.
    pub fn theta_or(&self, default: f64) -> Result<QosExponent, CliError> {
        match self.qos {
            Some(_) => self.theta(),
            None => QosExponent::new(default).map_err(|e| in_section("qos", e)),
        }
    }

    pub fn snr_db_or(&self, default: f64) -> Result<f64, CliError> {
        let db = self.channel.map_or(default, |c| c.snr_db);
        if !db.is_finite() {
            return Err(CliError::Config(format!("channel.snr_db: must be finite, got {db}")));
        }
        Ok(db)
    }

    pub fn delay_zeta(&self) -> f64 {
        self.delay.as_ref().and_then(|d| d.zeta).unwrap_or(1.0)
    }

    pub fn sweep(&self) -> SweepConfig {
        self.sweep.clone().unwrap_or_default()
    }

    pub fn sim(&self, seed_override: Option<u64>) -> Result<SimSection, CliError> {
        let mut sim = self.sim.unwrap_or_default();
        if let Some(seed) = seed_override {
            sim.seed = seed;
        }
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("sim.{field}: {why}")));
        if sim.n_blocks < 1 {
            return bad("n_blocks", "must be at least 1");
        }
        if sim.n_replications < 1 {
            return bad("n_replications", "must be at least 1");
        }
        if sim.warmup_blocks >= sim.n_blocks {
            return bad("warmup_blocks", "must be below n_blocks");
        }
        if sim.horizon < 1 {
            return bad("horizon", "must be at least 1");
        }
        if sim.mgf_replications < 2 {
            return bad("mgf_replications", "must be at least 2");
        }
        Ok(sim)
    }

    /// Resolves the analytic link: θ, channel, optimal rate and source.
    pub fn link(&self) -> Result<Link, CliError> {
        let source = self.source.ok_or_else(|| missing("source"))?;
        let channel = self.channel.ok_or_else(|| missing("channel"))?;
        let theta = self.theta()?;
        let shape = source.shape();
        shape.validate().map_err(|e| in_section("source", e))?;

        let snr = ChannelSpec::from_db(channel.snr_db, 0.0).map_err(|e| in_section("channel", e))?.snr();
        let optimum = optimal_rate(snr, theta).map_err(CliError::from)?;
        let rate = channel.rate.unwrap_or(optimum.r_star);
        let spec = ChannelSpec::new(snr, rate).map_err(|e| in_section("channel", e))?;

        let lambda_on = match source.lambda_on() {
            Some(l) => l,
            None => max_on_rate(&shape, effective_capacity(&spec, theta), theta)?,
        };
        let model = shape.with_lambda_on(lambda_on).map_err(|e| in_section("source", e))?;

        let zeta = self.delay_zeta();
        let delays = self
            .delay
            .as_ref()
            .map(|d| d.thresholds.clone())
            .unwrap_or_default()
            .into_iter()
            .map(|d| DelaySpec::new(d, zeta).map_err(|e| in_section("delay", e)))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Link { snr_db: channel.snr_db, theta, shape, source: model, channel: spec, optimum, delays })
    }
}

/// A fully validated analytic configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub snr_db: f64,
    pub theta: QosExponent,
    pub shape: SourceShape,
    pub source: SourceModel,
    /// Channel at the operating rate.
    pub channel: ChannelSpec,
    pub optimum: RateOptimum,
    pub delays: Vec<DelaySpec>,
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("{section}: section is required"))
}

fn in_section(section: &str, e: Error) -> CliError {
    match e {
        Error::InvalidParameter { field, reason } => CliError::Config(format!("{section}.{field}: {reason}")),
        other => CliError::Config(format!("{section}: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{
        "source": {"model": "dtms", "p11": 0.8, "p22": 0.2},
        "channel": {"snr_db": 10},
        "qos": {"theta": 1}
    }"#;

    fn config_error(text: &str) -> String {
        match Config::parse(text).and_then(|c| c.link()) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn worked_example_resolves() {
        let link = Config::parse(WORKED).unwrap().link().unwrap();
        assert!((link.optimum.r_star - 1.69608).abs() < 1e-5);
        assert!((link.channel.rate() - link.optimum.r_star).abs() < 1e-15);
        assert!((link.source.lambda_on() - 2.3415).abs() < 1e-3);
        assert!(link.delays.is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(config_error(r#"{"channel": {"snr": 10}}"#).contains("unknown field"));
        assert!(config_error(r#"{"source": {"model": "dtms", "p11": 0.5, "p22": 0.5, "lamda_on": 1}}"#)
            .contains("unknown field"));
        assert!(config_error(r#"{"extra": {}}"#).contains("unknown field"));
        assert!(config_error(r#"{"source": {"model": "onoff", "p11": 0.5}}"#).contains("unknown variant"));
    }

    #[test]
    fn errors_name_the_field() {
        let bad = WORKED.replace("\"p11\": 0.8", "\"p11\": 1.5");
        assert!(config_error(&bad).starts_with("source.p11"), "{}", config_error(&bad));
        let bad = WORKED.replace("\"theta\": 1", "\"theta\": -1");
        assert!(config_error(&bad).starts_with("qos."), "{}", config_error(&bad));
        let bad = WORKED.replace("\"snr_db\": 10}", "\"snr_db\": 10, \"rate\": -2}");
        assert!(config_error(&bad).starts_with("channel.rate"), "{}", config_error(&bad));
        let bad = WORKED.replace("\"qos\"", "\"delay\": {\"thresholds\": [-1]}, \"qos\"");
        assert!(config_error(&bad).starts_with("delay."), "{}", config_error(&bad));
        assert!(config_error(r#"{"channel": {"snr_db": 10}, "qos": {"theta": 1}}"#).starts_with("source"));
    }

    #[test]
    fn sim_defaults_and_overrides() {
        let c = Config::parse(r#"{"sim": {"n_blocks": 100, "warmup_blocks": 10, "seed": 5}}"#).unwrap();
        let s = c.sim(None).unwrap();
        assert_eq!((s.n_blocks, s.seed, s.horizon), (100, 5, 200));
        assert_eq!(c.sim(Some(9)).unwrap().seed, 9);
        let c = Config::parse(r#"{"sim": {"n_blocks": 10, "warmup_blocks": 10}}"#).unwrap();
        assert!(matches!(c.sim(None), Err(CliError::Config(m)) if m.starts_with("sim.warmup_blocks")));
    }
}
