//! Closed-form effective bandwidth of the two-state Markov sources.
//!
//! Every function returns a(θ) in bits/block. For θ below
//! [`SMALL_THETA`](crate::qos::SMALL_THETA) the analytic limit, the mean
//! arrival rate, is returned instead.

use crate::error::{Error, Result};
use crate::qos::{DtmsSource, FmsSource, MmpsSource, QosExponent, SourceModel};

/// θλ above which the DTMS eigenvalue is computed with e^{θλ} factored out.
const DTMS_LOG_SPACE: f64 = 30.0;

/// Effective bandwidth of a discrete-time ON/OFF source.
///
/// a(θ) is (1/θ)·ln μ where μ is the spectral radius of the θ-twisted
/// transition matrix:
///
/// μ = ½ (p11 + p22 e^{θλ} + √((p11 + p22 e^{θλ})² − 4(p11 + p22 − 1) e^{θλ})).
///
/// The discriminant is evaluated as (p22 e^{θλ} − p11)² + 4(1 − p11)(1 − p22) e^{θλ},
/// which is algebraically identical and never negative.
pub fn eb_dtms(source: &DtmsSource, theta: QosExponent) -> Result<f64> {
    let (p11, p22, lambda) = (source.p11(), source.p22(), source.lambda_on());
    if theta.is_small() {
        return Ok(lambda * source.p_on());
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let theta = theta.get();
    let x = theta * lambda;

    let log_mu = if x <= DTMS_LOG_SPACE {
        let e = x.exp();
        let b = p11 + p22 * e;
        let disc = (p22 * e - p11).powi(2) + 4.0 * (1.0 - p11) * (1.0 - p22) * e;
        check_discriminant(disc)?;
        (0.5 * (b + disc.sqrt())).ln()
    } else {
        // μ = e^{θλ}·½(p11 w + p22 + √((p22 − p11 w)² + 4(1 − p11)(1 − p22) w)), w = e^{−θλ}.
        let w = (-x).exp();
        let b = p11 * w + p22;
        let disc = (p22 - p11 * w).powi(2) + 4.0 * (1.0 - p11) * (1.0 - p22) * w;
        check_discriminant(disc)?;
        let scaled = 0.5 * (b + disc.sqrt());
        if scaled > 0.0 {
            x + scaled.ln()
        } else {
            // w underflowed with p22 = 0: μ ≈ √((1 − p11) e^{θλ}), or 1 if OFF is absorbing.
            if p11 < 1.0 {
                0.5 * (x + (1.0 - p11).ln())
            } else {
                0.0
            }
        }
    };
    let a = log_mu / theta;
    if !a.is_finite() {
        return Err(Error::Numeric {
            context: "eb_dtms",
            detail: format!("non-finite effective bandwidth for θ = {theta}, λ = {lambda}"),
        });
    }
    // The twisted eigenvalue is at least 1 whenever λ ≥ 0.
    Ok(a.max(0.0))
}

fn check_discriminant(disc: f64) -> Result<()> {
    if disc.is_nan() || disc < 0.0 {
        return Err(Error::Numeric {
            context: "eb_dtms",
            detail: format!("negative discriminant {disc}"),
        });
    }
    Ok(())
}

/// Effective bandwidth of a Markov fluid source:
/// (1/2θ)[θλ − (α+β) + √((θλ − (α+β))² + 4αθλ)].
pub fn eb_fms(source: &FmsSource, theta: QosExponent) -> f64 {
    if theta.is_small() {
        return source.lambda_on() * source.p_on();
    }
    let theta = theta.get();
    fluid_eigenvalue(theta * source.lambda_on(), source.alpha(), source.beta()) / theta
}

/// Effective bandwidth of a Markov-modulated Poisson source with unit-bit
/// arrivals: the fluid expression with θλ replaced by (e^θ − 1)λ.
pub fn eb_mmps(source: &MmpsSource, theta: QosExponent) -> f64 {
    if theta.is_small() {
        return source.lambda_on() * source.p_on();
    }
    let theta = theta.get();
    fluid_eigenvalue(theta.exp_m1() * source.lambda_on(), source.alpha(), source.beta()) / theta
}

/// Largest root ρ of ρ² − (u − α − β)ρ − αu = 0, the log-MGF growth rate of
/// a two-state continuous-time chain whose ON state contributes `u`.
pub(crate) fn fluid_eigenvalue(u: f64, alpha: f64, beta: f64) -> f64 {
    let y = u - (alpha + beta);
    let root = (y * y + 4.0 * alpha * u).sqrt();
    if y >= 0.0 {
        0.5 * (y + root)
    } else if root - y > 0.0 {
        // Rationalized to avoid cancellation when y is large and negative.
        2.0 * alpha * u / (root - y)
    } else {
        0.0
    }
}

/// Dispatches to the closed form matching the source variant.
pub fn effective_bandwidth(source: &SourceModel, theta: QosExponent) -> Result<f64> {
    match source {
        SourceModel::Dtms(s) => eb_dtms(s, theta),
        SourceModel::Fms(s) => Ok(eb_fms(s, theta)),
        SourceModel::Mmps(s) => Ok(eb_mmps(s, theta)),
    }
}
