//! FIFO fluid queue fed by a Markov source and drained by an ON/OFF channel.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{substream, Purpose};
use super::traffic::{arrivals_with, channel_states_with};
use crate::error::{invalid, Error, Result};
use crate::qos::{ChannelSpec, SourceModel};

/// Simulation budget and model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_blocks: usize,
    pub n_replications: usize,
    pub seed: u64,
    pub source: SourceModel,
    pub channel: ChannelSpec,
    pub warmup_blocks: usize,
    /// Final backlog above which an overloaded run is flagged unstable.
    /// Defaults to `λ_on·√n_blocks`.
    pub blowup_bound: Option<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks < 1 {
            return Err(invalid("n_blocks", "must be at least 1"));
        }
        if self.n_replications < 1 {
            return Err(invalid("n_replications", "must be at least 1"));
        }
        if self.warmup_blocks >= self.n_blocks {
            return Err(invalid("warmup_blocks", format!("{} must be below n_blocks = {}", self.warmup_blocks, self.n_blocks)));
        }
        if let Some(b) = self.blowup_bound {
            if b.is_nan() || b < 0.0 {
                return Err(invalid("blowup_bound", format!("{b} must be nonnegative")));
            }
        }
        Ok(())
    }

    fn bound(&self) -> f64 {
        self.blowup_bound
            .unwrap_or_else(|| self.source.lambda_on() * (self.n_blocks as f64).sqrt())
    }
}

/// Bit-weighted histogram of integer block delays.
///
/// `bits[d]` is the amount of traffic that waited exactly `d` blocks;
/// `pieces[d]` counts the FIFO fragments contributing to it, which is what
/// bounds the statistical resolution of the tail.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayHistogram {
    pub bits: Vec<f64>,
    pub pieces: Vec<u64>,
}

impl DelayHistogram {
    fn record(&mut self, delay: usize, amount: f64) {
        if delay >= self.bits.len() {
            self.bits.resize(delay + 1, 0.0);
            self.pieces.resize(delay + 1, 0);
        }
        self.bits[delay] += amount;
        self.pieces[delay] += 1;
    }

    pub fn merge(&mut self, other: &DelayHistogram) {
        for (d, (&b, &p)) in other.bits.iter().zip(&other.pieces).enumerate() {
            if d >= self.bits.len() {
                self.bits.resize(d + 1, 0.0);
                self.pieces.resize(d + 1, 0);
            }
            self.bits[d] += b;
            self.pieces[d] += p;
        }
    }

    pub fn total_bits(&self) -> f64 {
        self.bits.iter().sum()
    }

    pub fn max_delay(&self) -> Option<usize> {
        self.bits.iter().rposition(|&b| b > 0.0)
    }

    pub fn mean(&self) -> f64 {
        let total = self.total_bits();
        if total == 0.0 {
            return 0.0;
        }
        self.bits.iter().enumerate().map(|(d, &b)| d as f64 * b).sum::<f64>() / total
    }

    /// Empirical Pr{D ≥ d}, weighted by bits.
    pub fn ccdf(&self, d: usize) -> f64 {
        let total = self.total_bits();
        if total == 0.0 {
            return 0.0;
        }
        self.bits.iter().skip(d).sum::<f64>() / total
    }

    /// Number of fragments with delay ≥ d.
    pub fn tail_pieces(&self, d: usize) -> u64 {
        self.pieces.iter().skip(d).sum()
    }
}

/// One replication's per-block record.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub replication: usize,
    pub rate: f64,
    pub arrivals_per_block: Vec<f64>,
    pub service_on: Vec<bool>,
    /// Backlog at the end of each block.
    pub queue_bits: Vec<f64>,
    /// Delays of traffic arriving after warmup and departing within the run.
    pub delays: DelayHistogram,
    pub zeta_hat: f64,
    pub total_arrivals: f64,
    pub total_departures: f64,
    pub unstable: bool,
}

impl SimTrace {
    /// Recomputes the Lindley recursion from the stored sequences and
    /// checks it reproduces `queue_bits` exactly.
    pub fn recursion_holds(&self) -> bool {
        let mut q = 0.0_f64;
        self.arrivals_per_block
            .iter()
            .zip(&self.service_on)
            .zip(&self.queue_bits)
            .all(|((&a, &on), &stored)| {
                q = lindley(q, a, if on { self.rate } else { 0.0 });
                q == stored
            })
    }

    /// |arrivals − departures − final backlog|, relative to total arrivals.
    pub fn conservation_error(&self) -> f64 {
        let q_final = self.queue_bits.last().copied().unwrap_or(0.0);
        let gap = (self.total_arrivals - self.total_departures - q_final).abs();
        if self.total_arrivals > 0.0 {
            gap / self.total_arrivals
        } else {
            gap
        }
    }

    /// CSV dump, one row per block: `block,arrival_bits,on,queue_bits`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numeric { context: "trace csv", detail: e.to_string() };
        w.write_record(["block", "arrival_bits", "on", "queue_bits"]).map_err(io)?;
        for (k, ((a, on), q)) in self.arrivals_per_block.iter().zip(&self.service_on).zip(&self.queue_bits).enumerate() {
            w.write_record([
                k.to_string(),
                format!("{a:.8e}"),
                u8::from(*on).to_string(),
                format!("{q:.8e}"),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numeric { context: "trace csv", detail: e.to_string() })
    }
}

#[inline]
fn lindley(q: f64, a: f64, s: f64) -> f64 {
    (q + a - s).max(0.0)
}

/// Runs every replication (in parallel); results are in replication order.
pub fn simulate_queue(config: &SimConfig) -> Result<Vec<SimTrace>> {
    config.validate()?;
    Ok((0..config.n_replications)
        .into_par_iter()
        .map(|rep| simulate_replication(config, rep))
        .collect())
}

/// Runs one replication on its own random substreams.
///
/// Arrivals join the queue before the block's service is applied, so a bit
/// served in its arrival block has delay 0.
pub fn simulate_replication(config: &SimConfig, replication: usize) -> SimTrace {
    let rep = replication as u64;
    let n = config.n_blocks;
    let arrivals = arrivals_with(&config.source, n, &mut substream(config.seed, rep, Purpose::Arrivals));
    let service_on = channel_states_with(&config.channel, n, &mut substream(config.seed, rep, Purpose::Channel));
    let rate = config.channel.rate();

    let mut queue_bits = Vec::with_capacity(n);
    let mut fifo: VecDeque<(usize, f64)> = VecDeque::new();
    let mut delays = DelayHistogram::default();
    let (mut total_in, mut total_out) = (Neumaier::default(), Neumaier::default());
    let mut busy = 0usize;
    let mut q = 0.0_f64;

    for (k, (&a, &on)) in arrivals.iter().zip(&service_on).enumerate() {
        let s = if on { rate } else { 0.0 };
        let q_next = lindley(q, a, s);
        total_in.add(a);
        total_out.add(q + a - q_next);
        if a > 0.0 {
            fifo.push_back((k, a));
        }
        if q_next == 0.0 {
            // Everything left this block; drain the FIFO without rounding dust.
            for (arrived, amount) in fifo.drain(..) {
                if arrived >= config.warmup_blocks && amount > 0.0 {
                    delays.record(k - arrived, amount);
                }
            }
        } else {
            let mut budget = s;
            while budget > 0.0 {
                let Some(front) = fifo.front_mut() else { break };
                let take = front.1.min(budget);
                if front.0 >= config.warmup_blocks {
                    delays.record(k - front.0, take);
                }
                budget -= take;
                front.1 -= take;
                if front.1 <= 0.0 {
                    fifo.pop_front();
                }
            }
            if k >= config.warmup_blocks {
                busy += 1;
            }
        }
        q = q_next;
        queue_bits.push(q);
    }

    let steady = config.source.steady_state().ok();
    let overloaded = steady.is_none_or(|s| s.lambda_avg >= config.channel.mean_service());
    SimTrace {
        replication,
        rate,
        arrivals_per_block: arrivals,
        service_on,
        queue_bits,
        delays,
        zeta_hat: busy as f64 / (n - config.warmup_blocks) as f64,
        total_arrivals: total_in.sum(),
        total_departures: total_out.sum(),
        unstable: overloaded && q > config.bound(),
    }
}

/// Compensated summation, so conservation checks are not swamped by
/// rounding over millions of blocks.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qos::{DtmsSource, FmsSource, MmpsSource};

    fn config(source: SourceModel, channel: ChannelSpec, n_blocks: usize) -> SimConfig {
        SimConfig { n_blocks, n_replications: 2, seed: 7, source, channel, warmup_blocks: 0, blowup_bound: None }
    }

    fn dtms(p11: f64, p22: f64, lambda: f64) -> SourceModel {
        SourceModel::Dtms(DtmsSource::new(p11, p22, lambda).unwrap())
    }

    #[test]
    fn rejects_bad_budgets() {
        let ch = ChannelSpec::new(10.0, 1.0).unwrap();
        let mut c = config(dtms(0.5, 0.5, 1.0), ch, 10);
        c.warmup_blocks = 10;
        assert!(simulate_queue(&c).is_err());
        c.warmup_blocks = 0;
        c.n_replications = 0;
        assert!(simulate_queue(&c).is_err());
    }

    #[test]
    fn zero_arrivals_never_queue() {
        let c = config(dtms(0.5, 0.5, 0.0), ChannelSpec::new(10.0, 1.0).unwrap(), 5000);
        for t in simulate_queue(&c).unwrap() {
            assert_eq!(t.zeta_hat, 0.0);
            assert!(t.queue_bits.iter().all(|&q| q == 0.0));
            assert_eq!(t.delays.max_delay(), None);
            assert!(!t.unstable);
        }
    }

    #[test]
    fn no_service_is_flagged_unstable() {
        let c = config(dtms(0.5, 0.5, 1.0), ChannelSpec::new(10.0, 0.0).unwrap(), 5000);
        assert!(simulate_queue(&c).unwrap().iter().all(|t| t.unstable));
    }

    #[test]
    fn light_load_is_not_unstable() {
        let c = config(dtms(0.8, 0.2, 0.5), ChannelSpec::new(10.0, 1.7).unwrap(), 20_000);
        assert!(simulate_queue(&c).unwrap().iter().all(|t| !t.unstable));
    }

    #[test]
    fn recursion_and_conservation_hold() {
        let ch = ChannelSpec::new(10.0, 1.7).unwrap();
        for src in [
            dtms(0.8, 0.2, 2.341),
            SourceModel::Fms(FmsSource::new(0.2, 0.8, 2.0).unwrap()),
            SourceModel::Mmps(MmpsSource::new(0.2, 0.8, 2.0).unwrap()),
        ] {
            for t in simulate_queue(&config(src, ch, 50_000)).unwrap() {
                assert!(t.recursion_holds());
                assert!(t.conservation_error() < 1e-12, "{}", t.conservation_error());
                assert!((0.0..=1.0).contains(&t.zeta_hat));
            }
        }
    }

    #[test]
    fn delay_accounting_matches_hand_trace() {
        // Constant 1.5 bits per block into an always-ON rate-1 channel: the
        // backlog grows by 0.5 per block and FIFO delays are easy to follow.
        // An overwhelming SNR keeps every block ON.
        let c = SimConfig {
            n_blocks: 4,
            n_replications: 1,
            seed: 0,
            source: dtms(0.0, 1.0, 1.5),
            channel: ChannelSpec::new(1e300, 1.0).unwrap(),
            warmup_blocks: 0,
            blowup_bound: None,
        };
        let t = simulate_replication(&c, 0);
        assert!(t.service_on.iter().all(|&on| on));
        assert_eq!(t.queue_bits, vec![0.5, 1.0, 1.5, 2.0]);
        // Served: block0 1.0 of b0 (d0); block1 .5 of b0 (d1) + .5 of b1 (d0);
        // block2 1.0 of b1 (d1); block3 1.0 of b2 (d1).
        assert_eq!(t.delays.bits, vec![1.5, 2.5]);
        assert_eq!(t.delays.pieces, vec![2, 3]);
        assert_eq!(t.zeta_hat, 1.0);
    }

    #[test]
    fn deterministic_and_order_stable() {
        let c = config(dtms(0.8, 0.2, 2.341), ChannelSpec::new(10.0, 1.7).unwrap(), 20_000);
        let a = simulate_queue(&c).unwrap();
        let b = simulate_queue(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1], simulate_replication(&c, 1));
        assert_ne!(a[0].arrivals_per_block, a[1].arrivals_per_block);
    }

    #[test]
    fn busy_fraction_grows_with_load() {
        let ch = ChannelSpec::new(10.0, 1.7).unwrap();
        let mut last = -1.0;
        for lambda in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0] {
            let mut c = config(dtms(0.8, 0.2, lambda), ch, 100_000);
            c.n_replications = 1;
            let z = simulate_queue(&c).unwrap()[0].zeta_hat;
            assert!(z >= last, "λ={lambda}: {z} < {last}");
            last = z;
        }
    }

    #[test]
    fn warmup_excludes_early_blocks() {
        let mut c = config(dtms(0.8, 0.2, 2.341), ChannelSpec::new(10.0, 1.7).unwrap(), 10_000);
        let full = simulate_replication(&c, 0);
        c.warmup_blocks = 5_000;
        let tail = simulate_replication(&c, 0);
        assert_eq!(full.queue_bits, tail.queue_bits);
        assert!(tail.delays.total_bits() < full.delays.total_bits());
    }

    #[test]
    fn histogram_queries() {
        let mut h = DelayHistogram::default();
        h.record(0, 2.0);
        h.record(2, 1.0);
        h.record(2, 1.0);
        assert_eq!(h.ccdf(0), 1.0);
        assert_eq!(h.ccdf(1), 0.5);
        assert_eq!(h.ccdf(3), 0.0);
        assert_eq!(h.tail_pieces(1), 2);
        assert_eq!(h.mean(), 1.0);
        let mut g = DelayHistogram::default();
        g.record(4, 1.0);
        g.merge(&h);
        assert_eq!(g.bits, vec![2.0, 0.0, 2.0, 0.0, 1.0]);
    }

    #[test]
    fn trace_csv_layout() {
        let c = config(dtms(0.0, 1.0, 1.5), ChannelSpec::new(1e300, 1.0).unwrap(), 3);
        let t = simulate_replication(&c, 0);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "block,arrival_bits,on,queue_bits");
        assert_eq!(lines[1], "0,1.50000000e0,1,5.00000000e-1");
        assert_eq!(lines.len(), 4);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn stored_traces_satisfy_invariants(
            kind in 0usize..3, x in 0.05..0.95f64, y in 0.05..0.95f64,
            lambda in 0.0..4.0f64, snr in 0.5..100.0f64, rate in 0.0..3.0f64, seed in 0u64..1000,
        ) {
            let source = match kind {
                0 => dtms(x, y, lambda),
                1 => SourceModel::Fms(FmsSource::new(x * 3.0, y * 3.0, lambda).unwrap()),
                _ => SourceModel::Mmps(MmpsSource::new(x * 3.0, y * 3.0, lambda).unwrap()),
            };
            let mut c = config(source, ChannelSpec::new(snr, rate).unwrap(), 3000);
            c.seed = seed;
            c.warmup_blocks = 100;
            for t in simulate_queue(&c).unwrap() {
                proptest::prop_assert!(t.recursion_holds());
                proptest::prop_assert!(t.conservation_error() <= 1e-12);
                proptest::prop_assert!((0.0..=1.0).contains(&t.zeta_hat));
                proptest::prop_assert!(t.queue_bits.iter().all(|&q| q >= 0.0));
                // Departed traffic is recorded at most once.
                proptest::prop_assert!(t.delays.total_bits() <= t.total_departures * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
