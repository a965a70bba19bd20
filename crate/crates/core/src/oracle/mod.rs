//! Monte Carlo cross-check of the closed forms.
//!
//! Generates Markov traffic and block-fading ON/OFF service, runs a FIFO
//! fluid queue, and estimates effective bandwidth, effective capacity and
//! the delay-tail slope empirically. Every random draw comes from a
//! ChaCha8 substream keyed by (seed, replication, purpose); see
//! [`rng::substream`].

pub mod estimate;
pub mod queue;
pub mod rng;
pub mod tail;
pub mod traffic;

pub use estimate::{ec_oracle, eb_oracle, estimate_eb, estimate_ec, HorizonPair, MgfEstimate};
pub use queue::{simulate_queue, simulate_replication, DelayHistogram, SimConfig, SimTrace};
pub use tail::{fit_tail_slope, TailFit};
pub use traffic::{gen_arrivals, gen_channel_states};
