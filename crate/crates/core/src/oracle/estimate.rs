//! Empirical effective bandwidth and effective capacity.
//!
//! Both are scaled log-moment-generating functions of a cumulative process
//! over a finite horizon t, estimated from independent windows. The sample
//! mean of e^{θA} is dominated by rare large windows once θ²·Var(A) grows
//! past a few units, so every estimate carries an effective sample size
//! (Σw)²/Σw² of its importance weights; a small ESS means the standard
//! error itself is untrustworthy.

use rayon::prelude::*;
use serde::Serialize;

use super::rng::{substream, Purpose};
use super::traffic::{arrivals_with, channel_states_with};
use crate::error::{invalid, Result};
use crate::qos::{ChannelSpec, QosExponent, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfEstimate {
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
    pub effective_sample_size: f64,
    pub horizon: usize,
    pub replications: usize,
}

impl MgfEstimate {
    /// |value − reference| ≤ k·std_error.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.std_error
    }

    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = self.value - reference;
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap == 0.0 {
            0.0
        } else {
            gap.signum() * f64::INFINITY
        }
    }
}

/// ln mean(e^{x_i}) by log-sum-exp, with the delta-method standard error of
/// that log-mean and the effective sample size of the weights.
fn log_mean_exp(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let sum: f64 = w.iter().sum();
    let sum_sq: f64 = w.iter().map(|v| v * v).sum();
    let mean = sum / n;
    let var = if xs.len() > 1 {
        w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m + mean.ln(), var.sqrt() / (n.sqrt() * mean), sum * sum / sum_sq)
}

fn check_budget(len: usize, horizon: usize, n_replications: usize) -> Result<()> {
    if horizon < 1 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    if n_replications < 1 {
        return Err(invalid("n_replications", "must be at least 1"));
    }
    match horizon.checked_mul(n_replications) {
        Some(need) if need <= len => Ok(()),
        _ => Err(invalid(
            "horizon",
            format!("{horizon} blocks × {n_replications} replications exceeds the {len} samples supplied"),
        )),
    }
}

/// (1/θt)·ln mean e^{θA(t)} over `n_replications` consecutive, disjoint
/// windows of `horizon` blocks taken from the front of `arrivals`.
pub fn estimate_eb(arrivals: &[f64], theta: QosExponent, horizon: usize, n_replications: usize) -> Result<MgfEstimate> {
    check_budget(arrivals.len(), horizon, n_replications)?;
    let th = theta.get();
    let xs: Vec<f64> = arrivals
        .chunks_exact(horizon)
        .take(n_replications)
        .map(|w| th * w.iter().sum::<f64>())
        .collect();
    let (lme, se, ess) = log_mean_exp(&xs);
    let scale = th * horizon as f64;
    Ok(MgfEstimate {
        value: lme / scale,
        std_error: se / scale,
        effective_sample_size: ess,
        horizon,
        replications: n_replications,
    })
}

/// −(1/θt)·ln mean e^{−θS(t)}, S(t) = rate × (ON blocks in the window).
pub fn estimate_ec(service_on: &[bool], rate: f64, theta: QosExponent, horizon: usize, n_replications: usize) -> Result<MgfEstimate> {
    check_budget(service_on.len(), horizon, n_replications)?;
    let th = theta.get();
    let xs: Vec<f64> = service_on
        .chunks_exact(horizon)
        .take(n_replications)
        .map(|w| -th * rate * w.iter().filter(|&&on| on).count() as f64)
        .collect();
    let (lme, se, ess) = log_mean_exp(&xs);
    let scale = th * horizon as f64;
    Ok(MgfEstimate {
        value: -lme / scale,
        std_error: se / scale,
        effective_sample_size: ess,
        horizon,
        replications: n_replications,
    })
}

/// Estimates at horizons t and 2t. `consistent` is false when they differ
/// by more than the 95% interval of their difference, i.e. the finite-t
/// bias is still visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonPair {
    pub short: MgfEstimate,
    pub long: MgfEstimate,
    pub consistent: bool,
}

impl HorizonPair {
    fn new(short: MgfEstimate, long: MgfEstimate) -> Self {
        let band = 1.96 * short.std_error.hypot(long.std_error);
        let consistent = (short.value - long.value).abs() <= band;
        HorizonPair { short, long, consistent }
    }
}

/// Effective-bandwidth oracle: `n_replications` independent stationary
/// paths of 2t blocks, each on its own substream of `seed`.
pub fn eb_oracle(source: &SourceModel, theta: QosExponent, horizon: usize, n_replications: usize, seed: u64) -> Result<HorizonPair> {
    check_budget(usize::MAX, horizon, n_replications)?;
    let paths: Vec<Vec<f64>> = (0..n_replications as u64)
        .into_par_iter()
        .map(|rep| arrivals_with(source, 2 * horizon, &mut substream(seed, rep, Purpose::Arrivals)))
        .collect();
    let short: Vec<f64> = paths.iter().flat_map(|p| p[..horizon].iter().copied()).collect();
    let long: Vec<f64> = paths.concat();
    Ok(HorizonPair::new(
        estimate_eb(&short, theta, horizon, n_replications)?,
        estimate_eb(&long, theta, 2 * horizon, n_replications)?,
    ))
}

/// Effective-capacity counterpart of [`eb_oracle`].
pub fn ec_oracle(channel: &ChannelSpec, theta: QosExponent, horizon: usize, n_replications: usize, seed: u64) -> Result<HorizonPair> {
    check_budget(usize::MAX, horizon, n_replications)?;
    let paths: Vec<Vec<bool>> = (0..n_replications as u64)
        .into_par_iter()
        .map(|rep| channel_states_with(channel, 2 * horizon, &mut substream(seed, rep, Purpose::Channel)))
        .collect();
    let short: Vec<bool> = paths.iter().flat_map(|p| p[..horizon].iter().copied()).collect();
    let long: Vec<bool> = paths.concat();
    let rate = channel.rate();
    Ok(HorizonPair::new(
        estimate_ec(&short, rate, theta, horizon, n_replications)?,
        estimate_ec(&long, rate, theta, 2 * horizon, n_replications)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::effective_bandwidth;
    use crate::capacity::effective_capacity;
    use crate::qos::{DtmsSource, FmsSource, MmpsSource};
    use approx::assert_relative_eq;

    fn th(x: f64) -> QosExponent {
        QosExponent::new(x).unwrap()
    }

    #[test]
    fn constant_arrivals_are_exact() {
        let xs = vec![1.75; 1000];
        let e = estimate_eb(&xs, th(0.7), 10, 100).unwrap();
        assert_relative_eq!(e.value, 1.75, max_relative = 1e-14);
        assert_eq!(e.std_error, 0.0);
        assert_relative_eq!(e.effective_sample_size, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn always_on_channel_is_exact() {
        let on = vec![true; 1000];
        let e = estimate_ec(&on, 1.3, th(2.0), 20, 50).unwrap();
        assert_relative_eq!(e.value, 1.3, max_relative = 1e-14);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn rejects_short_input() {
        assert!(estimate_eb(&[1.0; 10], th(1.0), 5, 3).is_err());
        assert!(estimate_eb(&[1.0; 10], th(1.0), 0, 3).is_err());
        assert!(estimate_ec(&[true; 10], 1.0, th(1.0), 5, 0).is_err());
    }

    #[test]
    fn large_exponents_do_not_overflow() {
        let xs = vec![1000.0; 400];
        let e = estimate_eb(&xs, th(5.0), 200, 2).unwrap();
        assert_relative_eq!(e.value, 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn mmps_always_on_matches_poisson_mgf() {
        // Near-always-ON MMPS is Poisson(λ) per block: a(θ) = λ(e^θ − 1)/θ.
        // At θ = 1 and t = 1 the weights stay well behaved.
        let src = SourceModel::Mmps(MmpsSource::new(1.0, 1e-9, 1.0).unwrap());
        let pair = eb_oracle(&src, th(1.0), 1, 100_000, 3).unwrap();
        let closed = std::f64::consts::E - 1.0;
        assert!(pair.short.agrees_with(closed, 3.0), "z = {}", pair.short.z_score(closed));
        assert!(pair.long.agrees_with(closed, 3.0), "z = {}", pair.long.z_score(closed));
    }

    #[test]
    fn dtms_and_fluid_sources_in_resolvable_regime() {
        let theta = th(0.02);
        for (i, src) in [
            SourceModel::Dtms(DtmsSource::new(0.6, 0.5, 1.5).unwrap()),
            SourceModel::Fms(FmsSource::new(0.7, 1.2, 1.5).unwrap()),
            SourceModel::Mmps(MmpsSource::new(0.7, 1.2, 1.5).unwrap()),
        ]
        .iter()
        .enumerate()
        {
            let pair = eb_oracle(src, theta, 200, 4000, 100 + i as u64).unwrap();
            let closed = effective_bandwidth(src, theta).unwrap();
            assert!(pair.long.agrees_with(closed, 3.0), "{}: z = {}", src.name(), pair.long.z_score(closed));
            assert!(pair.long.effective_sample_size > 2000.0);
        }
    }

    #[test]
    fn capacity_oracle_and_ergodic_limit() {
        let ch = ChannelSpec::new(10.0, 1.69608).unwrap();
        let pair = ec_oracle(&ch, th(0.02), 200, 4000, 9).unwrap();
        let closed = effective_capacity(&ch, th(0.02));
        assert!(pair.long.agrees_with(closed, 3.0), "z = {}", pair.long.z_score(closed));
        assert!(pair.consistent);
        let tiny = ec_oracle(&ch, th(1e-5), 200, 4000, 9).unwrap();
        let ergodic = ch.mean_service();
        assert!(tiny.long.agrees_with(ergodic, 3.0), "z = {}", tiny.long.z_score(ergodic));
    }

    #[test]
    fn iid_capacity_at_unit_theta_single_block() {
        // One-block windows are exact for an i.i.d. channel and keep the
        // weights bounded at θ = 1.
        let ch = ChannelSpec::new(10.0, 1.69608).unwrap();
        let pair = ec_oracle(&ch, th(1.0), 1, 200_000, 21).unwrap();
        let closed = effective_capacity(&ch, th(1.0));
        assert!(pair.short.agrees_with(closed, 3.0), "z = {}", pair.short.z_score(closed));
        assert!(pair.consistent);
    }

    #[test]
    fn oracle_is_deterministic() {
        let src = SourceModel::Fms(FmsSource::new(0.5, 0.5, 1.0).unwrap());
        let a = eb_oracle(&src, th(0.1), 20, 200, 4).unwrap();
        let b = eb_oracle(&src, th(0.1), 20, 200, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_theta_long_horizon_is_flagged_unresolvable() {
        // At θ = 1 and t = 200 the windows' log-weights spread over tens of
        // nats: a handful of windows carry the whole mean, and the ESS says so.
        let src = SourceModel::Dtms(DtmsSource::new(0.8, 0.2, 2.3415).unwrap());
        let pair = eb_oracle(&src, th(1.0), 200, 10_000, 3).unwrap();
        assert!(pair.short.effective_sample_size < 10.0, "{:?}", pair.short);
        assert!(!pair.consistent);
    }
}
