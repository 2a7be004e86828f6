//! Scalar special functions and the finite-blocklength normal approximation.
//!
//! All rates are per channel use. Noise has unit variance, so a transmit power
//! is directly an SNR.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, LOG2_E};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{Flagged, Flags};

/// Information unit for rates and payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    #[default]
    Bits,
    Nats,
}

impl RateUnit {
    /// Converts an amount expressed in `self` into nats.
    pub fn to_nats(self, amount: f64) -> f64 {
        match self {
            RateUnit::Bits => amount * LN_2,
            RateUnit::Nats => amount,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RateUnit::Bits => "bits",
            RateUnit::Nats => "nats",
        }
    }
}

impl std::str::FromStr for RateUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bits" => Ok(RateUnit::Bits),
            "nats" => Ok(RateUnit::Nats),
            other => Err(Error::Parse(format!("unknown rate unit `{other}`"))),
        }
    }
}

/// Linear signal-to-noise power ratio (noise normalised to unit variance).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SnrLinear(f64);

impl SnrLinear {
    pub const ZERO: SnrLinear = SnrLinear(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 || value.is_infinite() {
            return Err(Error::domain("snr", value, "must be finite and non-negative"));
        }
        Ok(SnrLinear(value))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::domain("snr_db", db, "must be finite"));
        }
        SnrLinear::new(10f64.powf(db / 10.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// dB view; `-inf` for a silent link.
    pub fn to_db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

impl TryFrom<f64> for SnrLinear {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        SnrLinear::new(v)
    }
}

impl From<SnrLinear> for f64 {
    fn from(s: SnrLinear) -> f64 {
        s.0
    }
}

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

/// Excursion outside `[0, 1]` tolerated (and clamped away) by [`Probability::clamped`].
pub const PROBABILITY_CLAMP_TOLERANCE: f64 = 1e-12;

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);
    pub const HALF: Probability = Probability(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain("probability", value, "must lie in [0, 1]"));
        }
        Ok(Probability(value))
    }

    /// Accepts numerical results that stray at most 1e-12 outside `[0, 1]`.
    pub fn clamped(value: f64) -> Result<Self> {
        if !(-PROBABILITY_CLAMP_TOLERANCE..=1.0 + PROBABILITY_CLAMP_TOLERANCE).contains(&value) {
            return Err(Error::Consistency(format!(
                "probability {value:e} outside [0, 1] beyond the {PROBABILITY_CLAMP_TOLERANCE:e} clamp"
            )));
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }

    fn is_open_unit(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Information per channel use, tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePerChannelUse {
    pub value: f64,
    pub unit: RateUnit,
}

impl RatePerChannelUse {
    pub fn bits(value: f64) -> Self {
        RatePerChannelUse {
            value,
            unit: RateUnit::Bits,
        }
    }

    pub fn nats(value: f64) -> Self {
        RatePerChannelUse {
            value,
            unit: RateUnit::Nats,
        }
    }

    pub fn to_unit(self, unit: RateUnit) -> Self {
        let value = match (self.unit, unit) {
            (RateUnit::Bits, RateUnit::Nats) => self.value * LN_2,
            (RateUnit::Nats, RateUnit::Bits) => self.value / LN_2,
            _ => self.value,
        };
        RatePerChannelUse { value, unit }
    }
}

/// Upper-tail standard normal probability `Q(x) = P(N(0,1) > x)`.
pub fn q_func(x: f64) -> Result<Probability> {
    if !x.is_finite() {
        return Err(Error::domain("x", x, "Q-function argument must be finite"));
    }
    Ok(Probability(q_raw(x)))
}

/// `Q(x)` for finite or infinite `x` without the domain check.
pub(crate) fn q_raw(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of [`q_func`] on the open interval `(0, 1)`.
///
/// A rational approximation of the normal quantile seeds Newton iterations
/// on `q_func` that run until the step falls below 1e-14 (relative to
/// `max(1, |x|)`).
pub fn q_inv(p: Probability) -> Result<f64> {
    if !p.is_open_unit() {
        return Err(Error::domain(
            "p",
            p.value(),
            "Q-inverse is defined on the open interval (0, 1)",
        ));
    }
    let p = p.value();
    let mut x = -normal_quantile_guess(p);
    for _ in 0..100 {
        let density = normal_pdf(x);
        if density == 0.0 {
            break;
        }
        let step = (q_raw(x) - p) / density;
        x += step;
        if step.abs() <= 1e-14 * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::Consistency(format!(
        "Q-inverse Newton iteration did not settle for p = {p:e}"
    )))
}

/// Acklam's rational approximation to the standard normal quantile
/// (relative error about 1.2e-9), used only as a starting point.
fn normal_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (-p).ln_1p()).sqrt())
    }
}

/// Shannon capacity `log(1 + rho)` of the unit-noise AWGN channel.
pub fn capacity(rho: SnrLinear, unit: RateUnit) -> RatePerChannelUse {
    let nats = rho.0.ln_1p();
    RatePerChannelUse::nats(nats).to_unit(unit)
}

/// Channel dispersion `(1 - (1 + rho)^-2)`, times `log2(e)^2` in bits².
pub fn dispersion(rho: SnrLinear, unit: RateUnit) -> f64 {
    let nats = dispersion_nats(rho.0);
    match unit {
        RateUnit::Nats => nats,
        RateUnit::Bits => nats * LOG2_E * LOG2_E,
    }
}

/// `1 - (1 + s)^-2` written to stay accurate for small `s`.
pub(crate) fn dispersion_nats(s: f64) -> f64 {
    let one_plus = 1.0 + s;
    if s < 1.0 {
        s * (2.0 + s) / (one_plus * one_plus)
    } else {
        1.0 - (one_plus * one_plus).recip()
    }
}

/// Argument of `Q` in the normal approximation for a block of `channel_uses`
/// uses carrying `payload_nats` nats at SNR `snr`.
///
/// A silent link (`snr == 0`) has zero capacity and zero dispersion; the
/// argument is then `-inf` for any positive payload.
pub(crate) fn normal_approx_argument(payload_nats: f64, channel_uses: f64, snr: f64) -> f64 {
    let numerator = channel_uses * snr.ln_1p() - payload_nats;
    let spread = (channel_uses * dispersion_nats(snr)).sqrt();
    if spread == 0.0 {
        return match numerator.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
            Some(std::cmp::Ordering::Greater) => f64::INFINITY,
            _ => 0.0,
        };
    }
    numerator / spread
}

/// Conditional block-error probability of the normal approximation,
/// `Q((n C(s) - k) / sqrt(n V(s)))`, with `k` in `unit`.
pub fn conditional_error(payload: f64, channel_uses: f64, snr: f64, unit: RateUnit) -> f64 {
    q_raw(normal_approx_argument(
        unit.to_nats(payload),
        channel_uses,
        snr,
    ))
}

fn check_channel_uses(channel_uses: f64) -> Result<()> {
    if !(channel_uses.is_finite() && channel_uses > 0.0) {
        return Err(Error::domain(
            "channel_uses",
            channel_uses,
            "must be positive and finite",
        ));
    }
    Ok(())
}

/// Packet error probability of `k` bits over `n` AWGN channel uses.
///
/// `Q((n C(rho) [+ 0.5 log2 n] - k) / sqrt(n V(rho)))` with `C`, `V` in bits.
/// The numerator uses `n * C`: the capacity term scales with the channel
/// uses available to the user. Blocks shorter than 100 uses are flagged
/// [`Flags::SHORT_BLOCK`] rather than rejected.
pub fn awgn_error_prob(
    k: f64,
    n: f64,
    rho: SnrLinear,
    half_log_correction: bool,
) -> Result<Flagged<Probability>> {
    check_channel_uses(n)?;
    if !k.is_finite() || k < 0.0 {
        return Err(Error::domain("k", k, "payload must be finite and non-negative"));
    }
    let correction = if half_log_correction {
        0.5 * n.log2()
    } else {
        0.0
    };
    // Shift the payload by the correction so the same argument helper serves both forms.
    let payload_nats = (k - correction) * LN_2;
    let arg = normal_approx_argument(payload_nats, n, rho.0);
    Ok(Flagged::new(
        Probability(q_raw(arg)),
        Flags::short_block_if(n),
    ))
}

/// Maximum achievable rate `C(rho) - sqrt(V(rho)/n) Q^-1(eps)` in bits per
/// channel use. Negative rates are clamped to zero and flagged.
pub fn achievable_rate(
    n: f64,
    eps: Probability,
    rho: SnrLinear,
) -> Result<Flagged<RatePerChannelUse>> {
    check_channel_uses(n)?;
    let backoff = q_inv(eps)?;
    let rate = capacity(rho, RateUnit::Bits).value - (dispersion(rho, RateUnit::Bits) / n).sqrt() * backoff;
    let mut flags = Flags::short_block_if(n);
    let value = if rate < 0.0 {
        flags |= Flags::NEGATIVE_RATE;
        0.0
    } else {
        rate
    };
    Ok(Flagged::new(RatePerChannelUse::bits(value), flags))
}
