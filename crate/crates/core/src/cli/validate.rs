//! Monte Carlo validation of the closed forms for one configuration.
//!
//! Random streams: the queue simulation uses `seed`, the effective-bandwidth
//! oracle `seed + 1` and the effective-capacity oracle `seed + 2`, so the
//! three never share a substream.

use serde::Serialize;

use super::config::{Config, SimSection};
use super::CliError;
use crate::bandwidth::effective_bandwidth;
use crate::capacity::effective_capacity;
use crate::oracle::{eb_oracle, ec_oracle, fit_tail_slope, simulate_queue, DelayHistogram, HorizonPair, SimConfig};
use crate::qos::QosExponent;

/// Standard errors allowed between an estimate and its closed form.
pub const Z_TOLERANCE: f64 = 3.0;
/// Relative tolerance of the tail-slope check.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Range of delays (blocks) used for the tail fit.
pub const TAIL_RANGE: (usize, usize) = (5, 25);
/// Minimum number of FIFO fragments beyond a delay for it to enter the fit.
pub const TAIL_MIN_PIECES: u64 = 10;
/// Relative conservation error tolerated over a whole trace.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub estimate: f64,
    pub closed_form: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub theta: f64,
    pub n_blocks: usize,
    pub n_replications: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn validate(config: &Config, seed_override: Option<u64>) -> Result<ValidationReport, CliError> {
    let link = config.link()?;
    let sim = config.sim(seed_override)?;
    let theta = link.theta;
    let steady = link.source.steady_state()?;

    let traces = simulate_queue(&SimConfig {
        n_blocks: sim.n_blocks,
        n_replications: sim.n_replications,
        seed: sim.seed,
        source: link.source,
        channel: link.channel,
        warmup_blocks: sim.warmup_blocks,
        blowup_bound: None,
    })?;

    let mut checks = Vec::new();

    // Channel ON fraction: blocks are i.i.d., so the binomial interval is exact.
    let n_total = (sim.n_blocks * sim.n_replications) as f64;
    let on_count: usize = traces.iter().map(|t| t.service_on.iter().filter(|&&on| on).count()).sum();
    let p = link.channel.on_probability();
    let sigma = (p * (1.0 - p) / n_total).sqrt();
    checks.push(interval_check("channel_on_fraction", on_count as f64 / n_total, p, sigma, "binomial"));

    // Mean arrival rate, batch means across replications to absorb correlation.
    let batch = (sim.n_blocks / 50).max(1);
    let batches: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.arrivals_per_block.chunks(batch).filter(|c| c.len() == batch))
        .map(|c| c.iter().sum::<f64>() / batch as f64)
        .collect();
    let (mean, se) = mean_and_se(&batches);
    checks.push(interval_check("arrival_mean", mean, steady.lambda_avg, se, "batch means"));

    let worst = traces.iter().map(|t| t.conservation_error()).fold(0.0, f64::max);
    let recursion = traces.iter().all(|t| t.recursion_holds());
    checks.push(Check {
        name: "conservation",
        passed: recursion && worst <= CONSERVATION_TOLERANCE,
        estimate: worst,
        closed_form: 0.0,
        ci_low: 0.0,
        ci_high: CONSERVATION_TOLERANCE,
        detail: format!("relative arrivals - departures - backlog; Lindley recursion reproduced: {recursion}"),
    });

    let eb = adaptive(&sim, |t| eb_oracle(&link.source, theta, t, sim.mgf_replications, sim.seed.wrapping_add(1)))?;
    checks.push(mgf_check("effective_bandwidth", &eb, effective_bandwidth(&link.source, theta)?));
    let ec = adaptive(&sim, |t| ec_oracle(&link.channel, theta, t, sim.mgf_replications, sim.seed.wrapping_add(2)))?;
    checks.push(mgf_check("effective_capacity", &ec, effective_capacity(&link.channel, theta)));

    let mut delays = DelayHistogram::default();
    for t in &traces {
        delays.merge(&t.delays);
    }
    checks.push(tail_check(&delays, theta, effective_bandwidth(&link.source, theta)?));

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        seed: sim.seed,
        theta: theta.get(),
        n_blocks: sim.n_blocks,
        n_replications: sim.n_replications,
        checks,
        passed,
    })
}

/// Halves the MGF horizon until the importance weights retain at least a
/// tenth of the replications as effective samples; a smaller ESS means the
/// standard error cannot be trusted.
fn adaptive<F>(sim: &SimSection, run: F) -> Result<HorizonPair, CliError>
where
    F: Fn(usize) -> crate::Result<HorizonPair>,
{
    let floor = sim.mgf_replications as f64 / 10.0;
    let mut t = sim.horizon;
    loop {
        let pair = run(t)?;
        if pair.long.effective_sample_size >= floor || t == 1 {
            return Ok(pair);
        }
        t /= 2;
    }
}

fn mgf_check(name: &'static str, pair: &HorizonPair, closed: f64) -> Check {
    let est = pair.long;
    Check {
        name,
        passed: est.agrees_with(closed, Z_TOLERANCE),
        estimate: est.value,
        closed_form: closed,
        ci_low: est.value - Z_TOLERANCE * est.std_error,
        ci_high: est.value + Z_TOLERANCE * est.std_error,
        detail: format!(
            "horizon {} blocks, {} windows, effective sample size {:.1}; horizon {} gives {:.6} ({})",
            est.horizon,
            est.replications,
            est.effective_sample_size,
            pair.short.horizon,
            pair.short.value,
            if pair.consistent { "consistent" } else { "finite-horizon bias visible" },
        ),
    }
}

fn tail_check(delays: &DelayHistogram, theta: QosExponent, eb: f64) -> Check {
    let predicted = -theta.get() * eb;
    let (d_min, d_max) = TAIL_RANGE;
    let band = SLOPE_TOLERANCE * predicted.abs();
    match fit_tail_slope(delays, d_min, d_max, TAIL_MIN_PIECES) {
        Some(fit) => Check {
            name: "delay_tail_slope",
            passed: (fit.slope - predicted).abs() <= band,
            estimate: fit.slope,
            closed_form: predicted,
            ci_low: predicted - band,
            ci_high: predicted + band,
            detail: format!("least squares on ln Pr{{D >= d}} for d in {:?}", fit.delays),
        },
        None => Check {
            name: "delay_tail_slope",
            passed: false,
            estimate: f64::NAN,
            closed_form: predicted,
            ci_low: predicted - band,
            ci_high: predicted + band,
            detail: format!("fewer than 3 delays in [{d_min}, {d_max}] with {TAIL_MIN_PIECES}+ tail fragments; increase sim.n_blocks"),
        },
    }
}

fn interval_check(name: &'static str, estimate: f64, closed: f64, se: f64, how: &str) -> Check {
    Check {
        name,
        passed: (estimate - closed).abs() <= Z_TOLERANCE * se,
        estimate,
        closed_form: closed,
        ci_low: estimate - Z_TOLERANCE * se,
        ci_high: estimate + Z_TOLERANCE * se,
        detail: format!("{how}, standard error {se:.3e}"),
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "source": {"model": "dtms", "p11": 0.8, "p22": 0.2},
        "channel": {"snr_db": 10},
        "qos": {"theta": 1},
        "sim": {"n_blocks": 1000000, "n_replications": 2, "mgf_replications": 4000}
    }"#;

    #[test]
    fn worked_example_passes() {
        let r = validate(&Config::parse(SMALL).unwrap(), Some(1)).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(r.passed);
    }

    #[test]
    fn mismatched_theta_fails_tail_check() {
        let text = SMALL
            .replace("\"p22\": 0.2}", "\"p22\": 0.2, \"lambda_on\": 2.3415}")
            .replace("\"theta\": 1}", "\"theta\": 0.5}");
        let r = validate(&Config::parse(&text).unwrap(), Some(1)).unwrap();
        let tail = r.checks.iter().find(|c| c.name == "delay_tail_slope").unwrap();
        assert!(!tail.passed, "{tail:?}");
        assert!(!r.passed);
    }

    #[test]
    fn report_is_reproducible() {
        let text = SMALL.replace("1000000", "20000");
        let a = validate(&Config::parse(&text).unwrap(), Some(4)).unwrap();
        let b = validate(&Config::parse(&text).unwrap(), Some(4)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
