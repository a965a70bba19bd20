//! Shared domain types.
//!
//! All rates are expressed in bits per block, where one block is one fading
//! realization and one step of every Markov chain. Continuous-time source
//! parameters are transition rates per block. SNR values are linear; the dB
//! form only appears at the command-line boundary.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Below this QoS exponent the effective bandwidth and effective capacity
/// are replaced by their analytic θ → 0 limits (mean rates).
pub const SMALL_THETA: f64 = 1e-6;

/// Converts a power ratio in dB to its linear value.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decay rate of the delay/backlog tail, in 1/bit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct QosExponent(f64);

impl QosExponent {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid("theta", format!("must be positive and finite, got {theta}")));
        }
        Ok(Self(theta))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// True when θ is small enough that the analytic limits are used.
    #[inline]
    pub fn is_small(self) -> bool {
        self.0 < SMALL_THETA
    }
}

/// Fixed-rate transmission over a Rayleigh block-fading link.
///
/// A block is ON (delivers `rate` bits) when its instantaneous capacity
/// `log2(1 + snr·z)` exceeds the rate, with `z` unit-mean exponential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSpec {
    snr: f64,
    rate: f64,
}

impl ChannelSpec {
    pub fn new(snr: f64, rate: f64) -> Result<Self> {
        if !(snr.is_finite() && snr > 0.0) {
            return Err(invalid("snr", format!("must be positive and finite, got {snr}")));
        }
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(invalid("rate", format!("must be nonnegative and finite, got {rate}")));
        }
        Ok(Self { snr, rate })
    }

    pub fn from_db(snr_db: f64, rate: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(invalid("snr_db", format!("must be finite, got {snr_db}")));
        }
        Self::new(db_to_linear(snr_db), rate)
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(self.snr, rate)
    }

    /// Fading-power threshold Ψ = (2^r − 1)/γ above which a block is ON.
    pub fn threshold(&self) -> f64 {
        (self.rate * std::f64::consts::LN_2).exp_m1() / self.snr
    }

    /// Probability that a block is ON, e^{−Ψ}.
    pub fn on_probability(&self) -> f64 {
        (-self.threshold()).exp()
    }

    /// Mean service rate e^{−Ψ}·r in bits/block.
    pub fn mean_service(&self) -> f64 {
        if self.rate == 0.0 {
            return 0.0;
        }
        self.on_probability() * self.rate
    }
}

/// Discrete-time two-state Markov source: λ bits arrive in every ON block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DtmsSource {
    p11: f64,
    p22: f64,
    lambda_on: f64,
}

impl DtmsSource {
    /// `p11` is the probability of staying OFF, `p22` of staying ON.
    pub fn new(p11: f64, p22: f64, lambda_on: f64) -> Result<Self> {
        check_dtms_shape(p11, p22)?;
        check_lambda(lambda_on)?;
        Ok(Self { p11, p22, lambda_on })
    }

    /// Memoryless chain with the given ON probability (p11 = 1 − P_ON, p22 = P_ON).
    pub fn memoryless(p_on: f64, lambda_on: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_on) {
            return Err(invalid("p_on", format!("must lie in [0, 1], got {p_on}")));
        }
        Self::new(1.0 - p_on, p_on, lambda_on)
    }

    pub fn p11(&self) -> f64 {
        self.p11
    }

    pub fn p22(&self) -> f64 {
        self.p22
    }

    pub fn lambda_on(&self) -> f64 {
        self.lambda_on
    }

    pub fn p_on(&self) -> f64 {
        dtms_p_on(self.p11, self.p22)
    }
}

/// Markov fluid source: continuous rate λ while ON, exponential sojourns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FmsSource {
    alpha: f64,
    beta: f64,
    lambda_on: f64,
}

impl FmsSource {
    /// `alpha` is the OFF→ON rate, `beta` the ON→OFF rate, both per block.
    pub fn new(alpha: f64, beta: f64, lambda_on: f64) -> Result<Self> {
        check_rates(alpha, beta)?;
        check_lambda(lambda_on)?;
        Ok(Self { alpha, beta, lambda_on })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda_on(&self) -> f64 {
        self.lambda_on
    }

    pub fn p_on(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Markov-modulated Poisson source: unit-bit Poisson arrivals of intensity λ
/// while ON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmpsSource {
    alpha: f64,
    beta: f64,
    lambda_on: f64,
}

impl MmpsSource {
    pub fn new(alpha: f64, beta: f64, lambda_on: f64) -> Result<Self> {
        check_rates(alpha, beta)?;
        check_lambda(lambda_on)?;
        Ok(Self { alpha, beta, lambda_on })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda_on(&self) -> f64 {
        self.lambda_on
    }

    pub fn p_on(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// One of the three supported two-state Markov arrival models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SourceModel {
    Dtms(DtmsSource),
    Fms(FmsSource),
    Mmps(MmpsSource),
}

/// Steady-state ON probability and mean arrival rate of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub p_on: f64,
    pub lambda_avg: f64,
}

impl SourceModel {
    pub fn lambda_on(&self) -> f64 {
        match self {
            SourceModel::Dtms(s) => s.lambda_on,
            SourceModel::Fms(s) => s.lambda_on,
            SourceModel::Mmps(s) => s.lambda_on,
        }
    }

    /// The transition structure without the ON-state rate.
    pub fn shape(&self) -> SourceShape {
        match *self {
            SourceModel::Dtms(s) => SourceShape::Dtms { p11: s.p11, p22: s.p22 },
            SourceModel::Fms(s) => SourceShape::Fms { alpha: s.alpha, beta: s.beta },
            SourceModel::Mmps(s) => SourceShape::Mmps { alpha: s.alpha, beta: s.beta },
        }
    }

    pub fn steady_state(&self) -> Result<SteadyState> {
        steady_state(self)
    }

    pub fn name(&self) -> &'static str {
        self.shape().name()
    }
}

/// Transition structure of a source, independent of its ON-state rate.
///
/// Shapes are looser than [`SourceModel`]: FMS/MMPS accept `beta = 0`, the
/// always-ON limit used at the right edge of P_ON sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SourceShape {
    Dtms { p11: f64, p22: f64 },
    Fms { alpha: f64, beta: f64 },
    Mmps { alpha: f64, beta: f64 },
}

impl SourceShape {
    /// Sweep parameterization with a given ON probability: memoryless DTMS
    /// (p11 = 1 − P_ON, p22 = P_ON) and FMS/MMPS with α + β = 1, α = P_ON.
    pub fn dtms_with_p_on(p_on: f64) -> Self {
        SourceShape::Dtms { p11: 1.0 - p_on, p22: p_on }
    }

    pub fn fms_with_p_on(p_on: f64) -> Self {
        SourceShape::Fms { alpha: p_on, beta: 1.0 - p_on }
    }

    pub fn mmps_with_p_on(p_on: f64) -> Self {
        SourceShape::Mmps { alpha: p_on, beta: 1.0 - p_on }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceShape::Dtms { p11, p22 } => check_dtms_shape(p11, p22),
            SourceShape::Fms { alpha, beta } | SourceShape::Mmps { alpha, beta } => {
                check_shape_rates(alpha, beta)
            }
        }
    }

    pub fn p_on(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            SourceShape::Dtms { p11, p22 } => dtms_p_on(p11, p22),
            SourceShape::Fms { alpha, beta } | SourceShape::Mmps { alpha, beta } => {
                alpha / (alpha + beta)
            }
        })
    }

    /// Attaches an ON-state rate. Fails for the β = 0 limit shapes.
    pub fn with_lambda_on(&self, lambda_on: f64) -> Result<SourceModel> {
        Ok(match *self {
            SourceShape::Dtms { p11, p22 } => SourceModel::Dtms(DtmsSource::new(p11, p22, lambda_on)?),
            SourceShape::Fms { alpha, beta } => SourceModel::Fms(FmsSource::new(alpha, beta, lambda_on)?),
            SourceShape::Mmps { alpha, beta } => {
                SourceModel::Mmps(MmpsSource::new(alpha, beta, lambda_on)?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceShape::Dtms { .. } => "dtms",
            SourceShape::Fms { .. } => "fms",
            SourceShape::Mmps { .. } => "mmps",
        }
    }
}

/// Steady-state ON probability and mean arrival rate λ_avg = λ·P_ON.
pub fn steady_state(source: &SourceModel) -> Result<SteadyState> {
    let (p_on, lambda_on) = match source {
        SourceModel::Dtms(s) => {
            if s.p11 == 1.0 && s.p22 == 1.0 {
                return Err(Error::UndefinedSteadyState);
            }
            (s.p_on(), s.lambda_on)
        }
        SourceModel::Fms(s) => (s.p_on(), s.lambda_on),
        SourceModel::Mmps(s) => (s.p_on(), s.lambda_on),
    };
    Ok(SteadyState {
        p_on,
        lambda_avg: lambda_on * p_on,
    })
}

fn dtms_p_on(p11: f64, p22: f64) -> f64 {
    (1.0 - p11) / (2.0 - p11 - p22)
}

fn check_dtms_shape(p11: f64, p22: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p11) {
        return Err(invalid("p11", format!("must lie in [0, 1], got {p11}")));
    }
    if !(0.0..=1.0).contains(&p22) {
        return Err(invalid("p22", format!("must lie in [0, 1], got {p22}")));
    }
    if p11 + p22 >= 2.0 {
        return Err(Error::UndefinedSteadyState);
    }
    Ok(())
}

fn check_rates(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("must be positive and finite, got {beta}")));
    }
    Ok(())
}

fn check_shape_rates(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(invalid("beta", format!("must be nonnegative and finite, got {beta}")));
    }
    Ok(())
}

fn check_lambda(lambda_on: f64) -> Result<()> {
    if !(lambda_on.is_finite() && lambda_on >= 0.0) {
        return Err(invalid(
            "lambda_on",
            format!("must be nonnegative and finite, got {lambda_on}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dtms_steady_state() {
        let s = SourceModel::Dtms(DtmsSource::new(0.8, 0.2, 2.341).unwrap());
        let ss = steady_state(&s).unwrap();
        assert_relative_eq!(ss.p_on, 0.2, epsilon = 1e-15);
        assert_relative_eq!(ss.lambda_avg, 0.4682, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_fluid_source() {
        let s = SourceModel::Fms(FmsSource::new(1.0, 1.0, 2.0).unwrap());
        let ss = steady_state(&s).unwrap();
        assert_eq!(ss.p_on, 0.5);
        assert_eq!(ss.lambda_avg, 1.0);
    }

    #[test]
    fn always_on_dtms() {
        let s = SourceModel::Dtms(DtmsSource::new(0.0, 1.0, 5.0).unwrap());
        let ss = steady_state(&s).unwrap();
        assert_eq!(ss.p_on, 1.0);
        assert_eq!(ss.lambda_avg, 5.0);
    }

    #[test]
    fn absorbing_dtms_is_rejected() {
        assert_eq!(DtmsSource::new(1.0, 1.0, 1.0), Err(Error::UndefinedSteadyState));
        assert!(matches!(SourceShape::Dtms { p11: 1.0, p22: 1.0 }.p_on(), Err(Error::UndefinedSteadyState)));
    }

    #[test]
    fn parameter_validation() {
        assert!(DtmsSource::new(-0.1, 0.5, 1.0).is_err());
        assert!(DtmsSource::new(0.5, 1.5, 1.0).is_err());
        assert!(FmsSource::new(0.0, 1.0, 1.0).is_err());
        assert!(FmsSource::new(1.0, 0.0, 1.0).is_err());
        assert!(MmpsSource::new(1.0, 1.0, -1.0).is_err());
        assert!(QosExponent::new(0.0).is_err());
        assert!(QosExponent::new(f64::NAN).is_err());
        assert!(ChannelSpec::new(0.0, 1.0).is_err());
        assert!(ChannelSpec::new(1.0, -1.0).is_err());
        assert!(SourceShape::Fms { alpha: 1.0, beta: 0.0 }.validate().is_ok());
        assert!(SourceShape::Fms { alpha: 1.0, beta: 0.0 }.with_lambda_on(1.0).is_err());
    }

    #[test]
    fn channel_threshold_and_on_probability() {
        let ch = ChannelSpec::new(10.0, 1.69).unwrap();
        assert_relative_eq!(ch.threshold(), (2f64.powf(1.69) - 1.0) / 10.0, max_relative = 1e-14);
        assert_relative_eq!(ch.on_probability(), 0.8003, epsilon = 1e-4);
        let zero = ChannelSpec::new(3.0, 0.0).unwrap();
        assert_eq!(zero.threshold(), 0.0);
        assert_eq!(zero.on_probability(), 1.0);
        assert_eq!(zero.mean_service(), 0.0);
    }

    #[test]
    fn small_rate_threshold_has_no_cancellation() {
        let ch = ChannelSpec::new(1.0, 1e-12).unwrap();
        assert_relative_eq!(ch.threshold(), 1e-12 * std::f64::consts::LN_2, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn p_on_bounds(p11 in 0.0..1.0f64, p22 in 0.0..=1.0f64, lambda in 0.0..10.0f64) {
            let ss = steady_state(&SourceModel::Dtms(DtmsSource::new(p11, p22, lambda).unwrap())).unwrap();
            prop_assert!((0.0..=1.0).contains(&ss.p_on));
            prop_assert!(ss.lambda_avg <= lambda * (1.0 + 1e-15));
        }

        #[test]
        fn p_on_scale_invariant(alpha in 1e-3..10.0f64, beta in 1e-3..10.0f64, c in 1e-3..1e3f64) {
            let a = FmsSource::new(alpha, beta, 1.0).unwrap().p_on();
            let b = MmpsSource::new(c * alpha, c * beta, 1.0).unwrap().p_on();
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn db_round_trip(gamma in 1e-6..1e6f64) {
            let back = db_to_linear(linear_to_db(gamma));
            prop_assert!((back - gamma).abs() <= 1e-12 * gamma);
        }
    }
}
