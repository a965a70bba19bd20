//! Matching a source's effective bandwidth to the link's effective capacity.
//!
//! Given C_E(θ), each `max_on_rate_*` inverts a(θ) = C_E(θ) for the largest
//! ON-state rate the source may have; [`solve_qos_exponent`] goes the other
//! way and finds the exponent at which a fixed source meets the link.

use serde::Serialize;

use crate::bandwidth::effective_bandwidth;
use crate::capacity::effective_capacity;
use crate::error::{invalid, Error, Result};
use crate::qos::{steady_state, ChannelSpec, QosExponent, SourceModel, SourceShape, SMALL_THETA};

/// Largest exponent examined by [`solve_qos_exponent`].
pub const THETA_CAP: f64 = 1e3;

/// Relative bracket width at which the exponent search stops.
const THETA_REL_TOL: f64 = 1e-13;

/// Delay threshold and non-empty-buffer probability for the tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelaySpec {
    d: f64,
    zeta: f64,
}

impl DelaySpec {
    pub fn new(d: f64, zeta: f64) -> Result<Self> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(invalid("d", format!("must be nonnegative and finite, got {d}")));
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(invalid("zeta", format!("must lie in (0, 1], got {zeta}")));
        }
        Ok(Self { d, zeta })
    }

    /// ζ = 1, the conservative choice.
    pub fn with_threshold(d: f64) -> Result<Self> {
        Self::new(d, 1.0)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }
}

/// Maximum ON-state rate of a discrete-time source served at `ec`:
///
/// λ* = (1/θ)·ln((e^{2θc} − p11 e^{θc}) / ((1 − p11 − p22) + p22 e^{θc})).
///
/// Evaluated as c + (1/θ)[ln(m + q) − ln(q + p22·m)] with m = e^{θc} − 1 and
/// q = 1 − p11, which keeps both log arguments free of cancellation and
/// moves to log-space for large θc.
pub fn max_on_rate_dtms(p11: f64, p22: f64, ec: f64, theta: QosExponent) -> Result<f64> {
    let shape = SourceShape::Dtms { p11, p22 };
    let p_on = shape.p_on()?;
    check_ec(ec)?;
    if theta.is_small() {
        return mean_rate_inverse(ec, p_on);
    }
    let theta = theta.get();
    let x = theta * ec;
    let q = 1.0 - p11;
    let ln_m = if x < 30.0 {
        x.exp_m1().ln()
    } else {
        x + (-(-x).exp()).ln_1p()
    };
    let ln_num = log_add_exp(ln_m, q.ln());
    let ln_den = log_add_exp(q.ln(), p22.ln() + ln_m);
    if !(ln_num.is_finite() && ln_den.is_finite()) {
        return Err(Error::Infeasible(format!(
            "non-positive log argument in DTMS inversion (p11 = {p11}, p22 = {p22}, ec = {ec})"
        )));
    }
    let lambda = ec + (ln_num - ln_den) / theta;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Infeasible(format!("DTMS inversion produced λ* = {lambda}")));
    }
    Ok(lambda)
}

/// Maximum ON-state rate of a fluid source: λ* = c(θc + α + β)/(θc + α).
pub fn max_on_rate_fms(alpha: f64, beta: f64, ec: f64, theta: QosExponent) -> Result<f64> {
    SourceShape::Fms { alpha, beta }.validate()?;
    check_ec(ec)?;
    let tc = theta.get() * ec;
    Ok(ec * (tc + alpha + beta) / (tc + alpha))
}

/// Maximum ON-state intensity of a Markov-modulated Poisson source with
/// unit-bit arrivals: λ* = θc(θc + α + β) / ((e^θ − 1)(θc + α)).
///
/// This is the exact inverse of [`eb_mmps`](crate::bandwidth::eb_mmps).
pub fn max_on_rate_mmps(alpha: f64, beta: f64, ec: f64, theta: QosExponent) -> Result<f64> {
    SourceShape::Mmps { alpha, beta }.validate()?;
    check_ec(ec)?;
    let theta = theta.get();
    let tc = theta * ec;
    // θ/(e^θ − 1) → 1 as θ → 0, so the small-θ limit needs no special case.
    Ok(theta / theta.exp_m1() * ec * (tc + alpha + beta) / (tc + alpha))
}

/// Dispatches to the inversion matching the shape.
pub fn max_on_rate(shape: &SourceShape, ec: f64, theta: QosExponent) -> Result<f64> {
    match *shape {
        SourceShape::Dtms { p11, p22 } => max_on_rate_dtms(p11, p22, ec, theta),
        SourceShape::Fms { alpha, beta } => max_on_rate_fms(alpha, beta, ec, theta),
        SourceShape::Mmps { alpha, beta } => max_on_rate_mmps(alpha, beta, ec, theta),
    }
}

/// Largest supportable source rates on a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportableRate {
    pub effective_capacity: f64,
    pub p_on: f64,
    pub lambda_on: f64,
    pub lambda_avg: f64,
}

/// Maximum average arrival rate P_ON·λ* for a source shape on `channel`.
pub fn max_avg_rate(shape: &SourceShape, channel: &ChannelSpec, theta: QosExponent) -> Result<SupportableRate> {
    let ec = effective_capacity(channel, theta);
    supportable_at(shape, ec, theta)
}

/// As [`max_avg_rate`], for an effective capacity that is already known.
pub fn supportable_at(shape: &SourceShape, ec: f64, theta: QosExponent) -> Result<SupportableRate> {
    let p_on = shape.p_on()?;
    let lambda_on = max_on_rate(shape, ec, theta)?;
    Ok(SupportableRate {
        effective_capacity: ec,
        p_on,
        lambda_on,
        lambda_avg: p_on * lambda_on,
    })
}

/// Operating exponent θ* at which a(θ*) = C_E(θ*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub theta_star: f64,
    /// a(θ*) in bits/block.
    pub effective_bandwidth: f64,
    /// C_E(θ*) in bits/block.
    pub effective_capacity: f64,
    /// The source stays below C_E up to [`THETA_CAP`]; `theta_star` is the cap.
    pub saturated: bool,
}

/// Finds the unique θ* > 0 with a(θ*) = C_E(θ*).
///
/// a(θ) is nondecreasing and C_E(θ) nonincreasing, so their difference
/// crosses zero at most once. The bracket grows by doubling from
/// [`SMALL_THETA`] and is then bisected.
pub fn solve_qos_exponent(source: &SourceModel, channel: &ChannelSpec) -> Result<OperatingPoint> {
    let lambda_avg = steady_state(source)?.lambda_avg;
    let mean_service = channel.mean_service();
    if lambda_avg >= mean_service {
        return Err(Error::Unstable {
            lambda_avg,
            mean_service,
        });
    }
    let excess = |theta: f64| -> Result<(f64, f64)> {
        let t = QosExponent::new(theta)?;
        Ok((effective_bandwidth(source, t)?, effective_capacity(channel, t)))
    };

    // At θ → 0 the difference is λ_avg − e^{−Ψ}r < 0.
    let mut lo = 0.0;
    let mut hi = SMALL_THETA;
    loop {
        let (a, c) = excess(hi)?;
        if a >= c {
            break;
        }
        if hi >= THETA_CAP {
            return Ok(OperatingPoint {
                theta_star: THETA_CAP,
                effective_bandwidth: a,
                effective_capacity: c,
                saturated: true,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(THETA_CAP);
    }

    for _ in 0..400 {
        if hi - lo <= THETA_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (a, c) = excess(mid)?;
        if a >= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta_star = if lo > 0.0 { 0.5 * (lo + hi) } else { hi };
    let (a, c) = excess(theta_star)?;
    Ok(OperatingPoint {
        theta_star,
        effective_bandwidth: a,
        effective_capacity: c,
        saturated: false,
    })
}

/// Pr{D ≥ d} ≈ ζ·e^{−θ* a* d}, clamped to [0, 1].
pub fn delay_violation(theta_star: f64, a_star: f64, spec: &DelaySpec) -> f64 {
    let p = spec.zeta() * (-theta_star.max(0.0) * a_star.max(0.0) * spec.d()).exp();
    p.clamp(0.0, 1.0)
}

fn check_ec(ec: f64) -> Result<()> {
    if !(ec.is_finite() && ec >= 0.0) {
        return Err(invalid("ec", format!("must be nonnegative and finite, got {ec}")));
    }
    Ok(())
}

fn mean_rate_inverse(ec: f64, p_on: f64) -> Result<f64> {
    if p_on <= 0.0 {
        return Err(Error::Infeasible("source is never ON (P_ON = 0)".into()));
    }
    Ok(ec / p_on)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
