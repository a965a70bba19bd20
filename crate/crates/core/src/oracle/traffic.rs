//! Per-block traffic and channel-state generators.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use super::rng::{substream, Purpose};
use crate::qos::{ChannelSpec, SourceModel};

/// Per-block ON/OFF channel states from seed, replication 0.
pub fn gen_channel_states(channel: &ChannelSpec, n_blocks: usize, seed: u64) -> Vec<bool> {
    channel_states_with(channel, n_blocks, &mut substream(seed, 0, Purpose::Channel))
}

/// Draws a unit-mean exponential fading power z per block; the block is ON
/// iff its capacity log2(1 + γz) exceeds the rate.
pub fn channel_states_with<R: Rng + ?Sized>(channel: &ChannelSpec, n_blocks: usize, rng: &mut R) -> Vec<bool> {
    let (snr, rate) = (channel.snr(), channel.rate());
    (0..n_blocks)
        .map(|_| {
            let z: f64 = Exp1.sample(rng);
            (snr * z).ln_1p() / LN_2 > rate
        })
        .collect()
}

/// Per-block arrivals (bits) from seed, replication 0.
pub fn gen_arrivals(source: &SourceModel, n_blocks: usize, seed: u64) -> Vec<f64> {
    arrivals_with(source, n_blocks, &mut substream(seed, 0, Purpose::Arrivals))
}

/// Simulates a source started in its stationary distribution.
///
/// * DTMS: one chain step per block, λ bits in ON blocks.
/// * FMS: exact exponential sojourns in continuous time; a block receives λ
///   times the time spent ON within it.
/// * MMPS: the same ON periods; a block receives Poisson(λ·τ) unit-bit
///   arrivals for ON time τ within it.
pub fn arrivals_with<R: Rng + ?Sized>(source: &SourceModel, n_blocks: usize, rng: &mut R) -> Vec<f64> {
    match source {
        SourceModel::Dtms(s) => {
            let (p11, p22, lambda) = (s.p11(), s.p22(), s.lambda_on());
            let mut on = rng.random::<f64>() < s.p_on();
            let mut out = Vec::with_capacity(n_blocks);
            for _ in 0..n_blocks {
                out.push(if on { lambda } else { 0.0 });
                let u = rng.random::<f64>();
                on = if on { u < p22 } else { u >= p11 };
            }
            out
        }
        SourceModel::Fms(s) => {
            let lambda = s.lambda_on();
            on_times(s.alpha(), s.beta(), n_blocks, rng)
                .into_iter()
                .map(|tau| lambda * tau)
                .collect()
        }
        SourceModel::Mmps(s) => {
            let lambda = s.lambda_on();
            let taus = on_times(s.alpha(), s.beta(), n_blocks, rng);
            taus.into_iter()
                .map(|tau| {
                    let mean = lambda * tau;
                    if mean > 0.0 {
                        Poisson::new(mean).expect("positive finite mean").sample(rng)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    }
}

/// Time spent ON within each unit-length block by a two-state
/// continuous-time chain (OFF→ON rate `alpha`, ON→OFF rate `beta`).
fn on_times<R: Rng + ?Sized>(alpha: f64, beta: f64, n_blocks: usize, rng: &mut R) -> Vec<f64> {
    let sojourn = |on: bool, rng: &mut R| -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / if on { beta } else { alpha }
    };
    let mut on = rng.random::<f64>() < alpha / (alpha + beta);
    // Residual sojourn of a memoryless holding time is again exponential.
    let mut remaining = sojourn(on, rng);
    let mut out = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let mut left = 1.0;
        let mut on_time = 0.0;
        while remaining < left {
            if on {
                on_time += remaining;
            }
            left -= remaining;
            on = !on;
            remaining = sojourn(on, rng);
        }
        if on {
            on_time += left;
        }
        remaining -= left;
        out.push(on_time);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qos::{DtmsSource, FmsSource, MmpsSource};

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    /// Standard error of the mean from 1000-block batch means.
    fn batch_se(xs: &[f64]) -> f64 {
        let batches: Vec<f64> = xs.chunks(1000).map(mean).collect();
        let m = mean(&batches);
        let var = batches.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (batches.len() - 1) as f64;
        (var / batches.len() as f64).sqrt()
    }

    #[test]
    fn zero_rate_channel_is_always_on() {
        let ch = ChannelSpec::new(0.5, 0.0).unwrap();
        assert!(gen_channel_states(&ch, 10_000, 9).iter().all(|&on| on));
    }

    #[test]
    fn channel_on_fraction_matches_closed_form() {
        let ch = ChannelSpec::new(10.0, 1.69).unwrap();
        let n = 1_000_000;
        let states = gen_channel_states(&ch, n, 1);
        let frac = states.iter().filter(|&&on| on).count() as f64 / n as f64;
        let p = ch.on_probability();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() <= 3.0 * sigma, "{frac} vs {p}");
    }

    #[test]
    fn replay_is_identical() {
        let ch = ChannelSpec::new(3.0, 1.0).unwrap();
        assert_eq!(gen_channel_states(&ch, 1000, 5), gen_channel_states(&ch, 1000, 5));
        let src = SourceModel::Mmps(MmpsSource::new(0.4, 0.7, 2.0).unwrap());
        assert_eq!(gen_arrivals(&src, 1000, 5), gen_arrivals(&src, 1000, 5));
    }

    #[test]
    fn empirical_means_match_steady_state() {
        let sources = [
            SourceModel::Dtms(DtmsSource::new(0.7, 0.6, 2.0).unwrap()),
            SourceModel::Fms(FmsSource::new(0.3, 0.9, 2.0).unwrap()),
            SourceModel::Mmps(MmpsSource::new(0.3, 0.9, 2.0).unwrap()),
        ];
        for s in &sources {
            let xs = gen_arrivals(s, 1_000_000, 11);
            let avg = s.steady_state().unwrap().lambda_avg;
            let m = mean(&xs);
            assert!((m - avg).abs() <= 3.0 * batch_se(&xs), "{}: {m} vs {avg}", s.name());
        }
    }

    #[test]
    fn degenerate_sources() {
        let always = SourceModel::Dtms(DtmsSource::new(0.0, 1.0, 1.5).unwrap());
        assert!(gen_arrivals(&always, 500, 3).iter().all(|&a| a == 1.5));
        for s in [
            SourceModel::Dtms(DtmsSource::new(0.5, 0.5, 0.0).unwrap()),
            SourceModel::Fms(FmsSource::new(0.5, 0.5, 0.0).unwrap()),
            SourceModel::Mmps(MmpsSource::new(0.5, 0.5, 0.0).unwrap()),
        ] {
            assert!(gen_arrivals(&s, 500, 3).iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn fluid_arrivals_stay_within_peak() {
        let s = SourceModel::Fms(FmsSource::new(3.0, 2.0, 1.25).unwrap());
        let xs = gen_arrivals(&s, 10_000, 8);
        assert!(xs.iter().all(|&a| (0.0..=1.25 + 1e-12).contains(&a)));
        // Fast switching produces fractional blocks.
        assert!(xs.iter().any(|&a| a > 0.0 && a < 1.25));
    }

    #[test]
    fn poisson_arrivals_are_whole_bits() {
        let s = SourceModel::Mmps(MmpsSource::new(0.5, 0.5, 3.0).unwrap());
        assert!(gen_arrivals(&s, 10_000, 8).iter().all(|a| a.fract() == 0.0));
    }
}
