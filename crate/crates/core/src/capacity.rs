//! Effective capacity of a fixed-rate ON/OFF Rayleigh link.
//!
//! Each block is ON with probability e^{−Ψ}, Ψ = (2^r − 1)/γ, independently
//! of the other blocks, and then serves r bits. The effective capacity is
//!
//! C_E(θ) = −(1/θ)·ln(1 − e^{−Ψ}(1 − e^{−θr})).
//!
//! It is quasiconcave in r; the maximizing rate solves the fixed point
//! r = (1/θ)·ln(1 + γθ/(2^r ln 2)).

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::qos::{ChannelSpec, QosExponent};

/// Target on |r − (1/θ)ln(1 + γθ/(2^r ln 2))| at the returned optimum.
pub const RATE_TOLERANCE: f64 = 1e-10;

const MAX_BISECTIONS: usize = 200;

/// Ψ above which a block is treated as never ON when bracketing r*.
const MAX_THRESHOLD: f64 = 40.0;

/// Result of maximizing C_E over the transmission rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateOptimum {
    pub r_star: f64,
    pub ec_star: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Pr{log2(1 + γz) > r} = e^{−Ψ} for unit-mean exponential z.
pub fn channel_on_probability(channel: &ChannelSpec) -> f64 {
    channel.on_probability()
}

/// Effective capacity in bits/block. Returns the ergodic ON rate e^{−Ψ}·r
/// for θ below the small-θ threshold.
pub fn effective_capacity(channel: &ChannelSpec, theta: QosExponent) -> f64 {
    let r = channel.rate();
    if r == 0.0 {
        return 0.0;
    }
    let p_on = channel.on_probability();
    if theta.is_small() {
        return p_on * r;
    }
    let theta = theta.get();
    // 1 − p(1 − e^{−θr}) = 1 + p·expm1(−θr)
    -(p_on * (-theta * r).exp_m1()).ln_1p() / theta
}

/// Closed-form ∂C_E/∂r.
///
/// Positive below the optimal rate and negative above it. Numerator and
/// denominator are divided by θ so that (e^{−θr} − 1)/θ stays accurate as
/// θ → 0.
pub fn ec_rate_gradient(channel: &ChannelSpec, theta: QosExponent) -> f64 {
    let (r, snr) = (channel.rate(), channel.snr());
    let p_on = channel.on_probability();
    // dΨ/dr
    let psi_slope = LN_2 * r.exp2() / snr;
    if theta.is_small() {
        return p_on * (1.0 - r * psi_slope);
    }
    let theta = theta.get();
    let em1 = (-theta * r).exp_m1();
    let numerator = p_on * (-theta * r).exp() + psi_slope * p_on * em1 / theta;
    let denominator = 1.0 + p_on * em1;
    numerator / denominator
}

/// Central second difference of C_E in the rate, with step `h`.
///
/// Requires r > h and rejects steps small enough for round-off to swamp
/// the O(h²) truncation error.
pub fn ec_rate_curvature(channel: &ChannelSpec, theta: QosExponent, h: f64) -> Result<f64> {
    let r = channel.rate();
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid("h", format!("must be positive and finite, got {h}")));
    }
    if r <= h {
        return Err(invalid("h", format!("rate {r} must exceed the step {h}")));
    }
    let min = 1e-5 * r.max(1.0);
    if h < min {
        return Err(Error::StepTooSmall { h, min });
    }
    let at = |rate: f64| channel.with_rate(rate).map(|c| effective_capacity(&c, theta));
    let (lo, mid, hi) = (at(r - h)?, at(r)?, at(r + h)?);
    Ok((hi - 2.0 * mid + lo) / (h * h))
}

/// Stationarity residual g(r) = r − (1/θ)·ln(1 + γθ/(2^r ln 2)).
///
/// g is strictly increasing with g(0) < 0, so its unique root is the rate
/// maximizing C_E. Below the small-θ threshold the θ → 0 limit
/// g(r) = r − γ/(2^r ln 2) is used, whose root maximizes e^{−Ψ}·r.
pub fn stationarity_residual(snr: f64, theta: QosExponent, r: f64) -> f64 {
    let x = snr / (r.exp2() * LN_2);
    if theta.is_small() {
        r - x
    } else {
        let t = theta.get();
        r - (t * x).ln_1p() / t
    }
}

/// Rate maximizing the effective capacity for the given SNR and exponent.
///
/// Bisection on [`stationarity_residual`] over [0, log2(1 + 40γ)]; the upper
/// end is where Ψ = 40 and a block is essentially never ON.
pub fn optimal_rate(snr: f64, theta: QosExponent) -> Result<RateOptimum> {
    if !(snr.is_finite() && snr > 0.0) {
        return Err(invalid("snr", format!("must be positive and finite, got {snr}")));
    }
    let g = |r: f64| stationarity_residual(snr, theta, r);

    let mut lo = 0.0;
    let mut hi = (MAX_THRESHOLD * snr).ln_1p() / LN_2;
    while g(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoConvergence { lo, hi, iterations: 0 });
        }
    }

    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if gm == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let r_star = if g(hi).abs() < g(lo).abs() { hi } else { lo };
    let residual = g(r_star).abs();
    if residual > RATE_TOLERANCE {
        return Err(Error::NoConvergence { lo, hi, iterations });
    }
    let ec_star = effective_capacity(&ChannelSpec::new(snr, r_star)?, theta);
    Ok(RateOptimum {
        r_star,
        ec_star,
        residual,
        iterations,
    })
}
