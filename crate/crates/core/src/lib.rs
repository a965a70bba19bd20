//! QoS-constrained throughput analysis of a fixed-rate wireless link.
//!
//! A transmitter without channel knowledge sends at a fixed rate `r` over a
//! Rayleigh block-fading link, so each block either delivers `r` bits or
//! nothing. Traffic comes from a two-state Markov source (discrete-time,
//! fluid, or Markov-modulated Poisson). The crate provides:
//!
//! * [`bandwidth`]: closed-form effective bandwidth a(θ) of each source;
//! * [`capacity`]: effective capacity C_E(θ) of the link, its rate
//!   derivative, and the rate maximizing it;
//! * [`matching`]: maximum supportable source rates from a(θ) = C_E(θ),
//!   the operating exponent θ*, and delay-violation estimates;
//! * [`oracle`]: a seeded Monte Carlo queue simulator and empirical
//!   estimators used to cross-check every closed form;
//! * [`cli`]: configuration, reports and figure sweeps behind the
//!   `qoslink` binary.

pub mod bandwidth;
pub mod capacity;
pub mod cli;
pub mod error;
pub mod matching;
pub mod oracle;
pub mod qos;

pub use error::{Error, Result};
pub use qos::{
    ChannelSpec, DtmsSource, FmsSource, MmpsSource, QosExponent, SourceModel, SourceShape,
    SteadyState,
};
