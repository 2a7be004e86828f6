//! Outage over quasi-static Rayleigh fading.
//!
//! The conditional block-error probability `Q(f(z))` is replaced by a
//! piecewise-linear surrogate `W(z)` (one on `[0, sigma]`, a line through
//! `(theta, 1/2)` with slope `-b/sqrt(2 pi)`, zero from `delta` on). Its
//! expectation has closed forms against the unit exponential and against
//! the interference-limited NOMA SINR density. The exact expectation of
//! `Q(f(z))` is computed by adaptive quadrature and serves as the reference.
//!
//! Payloads follow the `e^{k/n}` convention of the linearization: a payload
//! given in [`RateUnit::Nats`] enters the exponent as-is, one given in
//! [`RateUnit::Bits`] is converted to nats first.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::awgn::{AccessScheme, FrameConfig, LinkPowers, User};
use crate::error::{Error, Result};
use crate::flags::{Flagged, Flags};
use crate::numerics::{conditional_error, Probability, RateUnit, SnrLinear};
use crate::quadrature::{integrate, integrate_to_infinity, QuadratureOptions};

/// Largest tolerated gap between the user-2 closed form and quadrature.
pub const NOMA_CLOSED_FORM_TOLERANCE: f64 = 1e-6;

/// Statistical model of the NOMA user-2 SINR under fading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SinrModel {
    /// `P2 |h2|^2 / (P1 |h1|^2)`: receiver noise neglected against interference.
    #[default]
    InterferenceLimited,
    /// `P2 |h2|^2 / (1 + P1 |h1|^2)`.
    FullNoise,
}

impl SinrModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SinrModel::InterferenceLimited => "interference-limited",
            SinrModel::FullNoise => "full-noise",
        }
    }

    /// User-2 SINR for one pair of squared channel envelopes.
    pub fn sinr(self, powers: &LinkPowers, z1: f64, z2: f64) -> f64 {
        let signal = powers.p2.value() * z2;
        let interference = powers.p1.value() * z1;
        match self {
            SinrModel::InterferenceLimited => signal / interference,
            SinrModel::FullNoise => signal / (1.0 + interference),
        }
    }
}

impl std::str::FromStr for SinrModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SinrModel::InterferenceLimited, SinrModel::FullNoise]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown SINR model `{s}`")))
    }
}

/// Piecewise-linear surrogate of the conditional error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLinearization {
    pub theta: f64,
    pub b: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl QLinearization {
    pub fn new(theta: f64, b: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::domain("theta", theta, "pivot must be positive and finite"));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain("b", b, "slope scale must be positive and finite"));
        }
        let half_width = (PI / (2.0 * b * b)).sqrt();
        Ok(QLinearization {
            theta,
            b,
            sigma: theta - half_width,
            delta: theta + half_width,
        })
    }

    /// `sqrt(pi / (2 b^2))`, the distance from the pivot to either knee.
    pub fn half_width(&self) -> f64 {
        (PI / (2.0 * self.b * self.b)).sqrt()
    }

    /// Magnitude of the linear branch's slope, `b / sqrt(2 pi)`.
    pub fn slope(&self) -> f64 {
        self.b / (2.0 * PI).sqrt()
    }
}

/// Linearizes `Q(f(z))` for a `k`-payload packet over `n_eff` channel uses
/// at average SNR `rho`.
///
/// `theta = (e^{k/n} - 1) / rho`, `b = sqrt(n rho^2 / (e^{2k/n} - 1))` with
/// `k` in nats.
pub fn linearize(
    k: f64,
    n_eff: f64,
    rho: SnrLinear,
    unit: RateUnit,
) -> Result<Flagged<QLinearization>> {
    if !(n_eff.is_finite() && n_eff > 0.0) {
        return Err(Error::domain("n_eff", n_eff, "must be positive and finite"));
    }
    if rho.value() == 0.0 {
        return Err(Error::domain("rho", 0.0, "linearization needs a positive SNR"));
    }
    let rate = unit.to_nats(k) / n_eff;
    let rho = rho.value();
    let theta = rate.exp_m1() / rho;
    let b = (n_eff * rho * rho / (2.0 * rate).exp_m1()).sqrt();
    let lin = QLinearization::new(theta, b)?;
    Ok(Flagged::new(lin, Flags::short_block_if(n_eff)))
}

/// Linearization in the SINR variable itself (unit average SNR), used for
/// the NOMA user whose SINR density is known directly.
pub fn sinr_linearization(k: f64, n: f64, unit: RateUnit) -> Result<Flagged<QLinearization>> {
    linearize(k, n, SnrLinear::new(1.0).expect("unit SNR"), unit)
}

/// The surrogate `W(z)`.
pub fn surrogate_w(lin: &QLinearization, z: f64) -> Probability {
    let w = if z <= lin.sigma {
        1.0
    } else if z >= lin.delta {
        0.0
    } else {
        (0.5 - lin.slope() * (z - lin.theta)).clamp(0.0, 1.0)
    };
    Probability::new(w).expect("surrogate is clamped to [0, 1]")
}

/// `∫_0^∞ W(z) pdf(z) dz` by adaptive quadrature over the surrogate's support.
pub fn surrogate_expectation<F: Fn(f64) -> f64>(
    lin: &QLinearization,
    pdf: F,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if lin.delta <= 0.0 {
        return Ok(0.0);
    }
    let mut cuts = decade_cuts(lin.delta);
    cuts.extend([lin.sigma, lin.theta]);
    let integral = integrate(
        |z| surrogate_w(lin, z).value() * pdf(z),
        0.0,
        lin.delta,
        &cuts,
        opts,
    )?;
    Ok(integral.value)
}

// Decade cuts keep a wide support from hiding mass near zero in one panel.
fn decade_cuts(upper: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    let mut decade = 1e-3;
    while decade < upper {
        cuts.push(decade);
        decade *= 10.0;
    }
    cuts
}

fn unit_exponential(z: f64) -> f64 {
    (-z).exp()
}

/// Outage of an interference-free user under Rayleigh fading:
/// `1 - (b/sqrt(2 pi)) e^{-theta} (e^{h} - e^{-h})`, `h` the half-width.
///
/// When the lower knee is negative the closed form would count surrogate
/// mass below zero; the value then comes from quadrature over `[0, delta]`
/// and carries [`Flags::SURROGATE_QUADRATURE`].
pub fn oma_fading_outage(lin: &QLinearization) -> Result<Flagged<Probability>> {
    if lin.sigma < 0.0 {
        let value = surrogate_expectation(lin, unit_exponential, &QuadratureOptions::default())?;
        return Ok(Flagged::new(
            Probability::clamped(value)?,
            Flags::SURROGATE_QUADRATURE,
        ));
    }
    // e^{-theta} 2 sinh(h) = e^{-sigma} (1 - e^{-2h}), finite for any theta.
    let h = lin.half_width();
    let value = 1.0 + lin.slope() * (-lin.sigma).exp() * (-2.0 * h).exp_m1();
    Ok(Flagged::clean(Probability::clamped(value)?))
}

/// Exact outage `E_z[Q((n C(rho z) - k) / sqrt(n V(rho z)))]` over the unit
/// exponential, by adaptive quadrature with absolute tolerance 1e-10.
pub fn exact_fading_outage(
    k: f64,
    n_eff: f64,
    rho: SnrLinear,
    unit: RateUnit,
) -> Result<Probability> {
    exact_fading_outage_with(k, n_eff, rho, unit, &QuadratureOptions::default())
}

pub fn exact_fading_outage_with(
    k: f64,
    n_eff: f64,
    rho: SnrLinear,
    unit: RateUnit,
    opts: &QuadratureOptions,
) -> Result<Probability> {
    if !(n_eff.is_finite() && n_eff > 0.0) {
        return Err(Error::domain("n_eff", n_eff, "must be positive and finite"));
    }
    let rho = rho.value();
    if rho == 0.0 {
        return Ok(Probability::ONE);
    }
    // Gain at which the mean rate matches the payload; the integrand drops there.
    let pivot = (unit.to_nats(k) / n_eff).exp_m1() / rho;
    let mut cuts = decade_cuts(pivot);
    cuts.push(pivot);
    let integral = integrate_to_infinity(
        |z| conditional_error(k, n_eff, rho * z, unit) * (-z).exp(),
        0.0,
        &cuts,
        opts,
    )?;
    Probability::clamped(integral.value)
}

fn check_interferer(powers: &LinkPowers) -> Result<()> {
    if powers.p1.value() == 0.0 {
        return Err(Error::domain(
            "p1",
            0.0,
            "interference-limited SINR needs a positive interferer; use the user-1 path",
        ));
    }
    Ok(())
}

/// Density of `P2 E2 / (P1 E1)` for independent unit exponentials:
/// `P1 P2 / (z P1 + P2)^2`.
pub fn noma_user2_sinr_pdf(z: f64, powers: &LinkPowers) -> Result<f64> {
    check_interferer(powers)?;
    Ok(il_pdf(z, powers.p1.value(), powers.p2.value()))
}

/// Distribution function `z P1 / (z P1 + P2)` of the interference-limited SINR.
pub fn noma_user2_sinr_cdf(z: f64, powers: &LinkPowers) -> Result<f64> {
    check_interferer(powers)?;
    let (p1, p2) = (powers.p1.value(), powers.p2.value());
    Ok(if z <= 0.0 { 0.0 } else { z * p1 / (z * p1 + p2) })
}

fn il_pdf(z: f64, p1: f64, p2: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    let d = z * p1 + p2;
    p1 * p2 / (d * d)
}

/// Density of `P2 E2 / (1 + P1 E1)`.
pub fn full_noise_sinr_pdf(z: f64, powers: &LinkPowers) -> f64 {
    let (p1, p2) = (powers.p1.value(), powers.p2.value());
    if z < 0.0 || p2 == 0.0 {
        return 0.0;
    }
    let d = p2 + z * p1;
    (-z / p2).exp() * (1.0 / d + p1 * p2 / (d * d))
}

/// Distribution function `1 - e^{-z/P2} P2 / (P2 + z P1)` of the full-noise SINR.
pub fn full_noise_sinr_cdf(z: f64, powers: &LinkPowers) -> f64 {
    let (p1, p2) = (powers.p1.value(), powers.p2.value());
    if z <= 0.0 {
        return 0.0;
    }
    if p2 == 0.0 {
        return 1.0;
    }
    -((-z / p2).exp_m1()) + (-z / p2).exp() * (z * p1) / (p2 + z * p1)
}

pub fn sinr_pdf(model: SinrModel, z: f64, powers: &LinkPowers) -> Result<f64> {
    match model {
        SinrModel::InterferenceLimited => noma_user2_sinr_pdf(z, powers),
        SinrModel::FullNoise => Ok(full_noise_sinr_pdf(z, powers)),
    }
}

/// Three-term closed form for `∫ W(z) P1 P2 / (z P1 + P2)^2 dz` with
/// `sigma >= 0`.
///
/// Grouping: the first numerator is `2c P2^2 (delta - sigma) + 2 P1^2 delta sigma`
/// and the third is `P1 P2 (delta + 2c theta delta + sigma - 2c theta sigma)`,
/// `c = b / sqrt(2 pi)`. This grouping equals the exact integral of the
/// surrogate against the density.
pub fn noma_user2_closed_form(lin: &QLinearization, powers: &LinkPowers) -> Result<f64> {
    check_interferer(powers)?;
    let (p1, p2) = (powers.p1.value(), powers.p2.value());
    let (sigma, delta, theta) = (lin.sigma, lin.delta, lin.theta);
    let c = lin.slope();
    let at_delta = p2 + p1 * delta;
    let at_sigma = p2 + p1 * sigma;
    let denom = 2.0 * at_delta * at_sigma;
    let first = (2.0 * c * p2 * p2 * (delta - sigma) + 2.0 * p1 * p1 * delta * sigma) / denom;
    let second = c * p2 * (at_sigma / at_delta).ln() / p1;
    let third =
        p1 * p2 * (delta + 2.0 * c * theta * delta + sigma - 2.0 * c * theta * sigma) / denom;
    Ok(first + second + third)
}

/// Outage of the NOMA user decoded first (interference-limited SINR model).
///
/// The closed form is checked against quadrature of `W * pdf`. A gap above
/// [`NOMA_CLOSED_FORM_TOLERANCE`] returns the quadrature value flagged
/// [`Flags::CLOSED_FORM_MISMATCH`]; a negative lower knee returns the
/// quadrature value flagged [`Flags::SURROGATE_QUADRATURE`].
pub fn noma_user2_outage(lin: &QLinearization, powers: &LinkPowers) -> Result<Flagged<Probability>> {
    check_interferer(powers)?;
    let (p1, p2) = (powers.p1.value(), powers.p2.value());
    let reference = surrogate_expectation(lin, |z| il_pdf(z, p1, p2), &QuadratureOptions::default())?;
    if lin.sigma < 0.0 {
        return Ok(Flagged::new(
            Probability::clamped(reference)?,
            Flags::SURROGATE_QUADRATURE,
        ));
    }
    let closed = noma_user2_closed_form(lin, powers)?;
    if !closed.is_finite() || (closed - reference).abs() > NOMA_CLOSED_FORM_TOLERANCE {
        return Ok(Flagged::new(
            Probability::clamped(reference)?,
            Flags::CLOSED_FORM_MISMATCH,
        ));
    }
    Ok(Flagged::clean(Probability::clamped(closed)?))
}

/// Exact outage of the NOMA user decoded first: `E[Q(f(s))]` over the SINR
/// distribution of `model`, by adaptive quadrature.
pub fn exact_noma_user2_outage(
    k: f64,
    n: f64,
    powers: &LinkPowers,
    unit: RateUnit,
    model: SinrModel,
) -> Result<Probability> {
    exact_noma_user2_outage_with(k, n, powers, unit, model, &QuadratureOptions::default())
}

pub fn exact_noma_user2_outage_with(
    k: f64,
    n: f64,
    powers: &LinkPowers,
    unit: RateUnit,
    model: SinrModel,
    opts: &QuadratureOptions,
) -> Result<Probability> {
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::domain("n", n, "must be positive and finite"));
    }
    if model == SinrModel::InterferenceLimited {
        check_interferer(powers)?;
    }
    if powers.p2.value() == 0.0 {
        return Ok(Probability::ONE);
    }
    let pivot = (unit.to_nats(k) / n).exp_m1();
    let mut cuts = decade_cuts(pivot);
    cuts.push(pivot);
    let integral = integrate_to_infinity(
        |s| {
            let pdf = match model {
                SinrModel::InterferenceLimited => il_pdf(s, powers.p1.value(), powers.p2.value()),
                SinrModel::FullNoise => full_noise_sinr_pdf(s, powers),
            };
            conditional_error(k, n, s, unit) * pdf
        },
        0.0,
        &cuts,
        opts,
    )?;
    Probability::clamped(integral.value)
}

/// Linearized per-user outage for `scheme`.
pub fn linearized_outage(
    scheme: AccessScheme,
    cfg: &FrameConfig,
    powers: &LinkPowers,
    unit: RateUnit,
) -> Result<[Flagged<Probability>; 2]> {
    let k = |u: User| f64::from(cfg.payload(u));
    match scheme {
        AccessScheme::Oma => {
            cfg.check_oma_split()?;
            let user = |u: User| -> Result<Flagged<Probability>> {
                let lin = linearize(k(u), cfg.channel_uses(scheme, u), powers.get(u), unit)?;
                Ok(oma_fading_outage(&lin.value)?.with(lin.flags))
            };
            Ok([user(User::One)?, user(User::Two)?])
        }
        AccessScheme::Noma => {
            let n = f64::from(cfg.n);
            let lin1 = linearize(k(User::One), n, powers.p1, unit)?;
            let lin2 = sinr_linearization(k(User::Two), n, unit)?;
            Ok([
                oma_fading_outage(&lin1.value)?.with(lin1.flags),
                noma_user2_outage(&lin2.value, powers)?.with(lin2.flags),
            ])
        }
    }
}

/// Quadrature-exact per-user outage for `scheme`; `model` selects the NOMA
/// user-2 SINR distribution.
pub fn exact_outage(
    scheme: AccessScheme,
    cfg: &FrameConfig,
    powers: &LinkPowers,
    unit: RateUnit,
    model: SinrModel,
) -> Result<[Flagged<Probability>; 2]> {
    let k = |u: User| f64::from(cfg.payload(u));
    if scheme == AccessScheme::Oma {
        cfg.check_oma_split()?;
    }
    let user = |u: User| -> Result<Flagged<Probability>> {
        let n_eff = cfg.channel_uses(scheme, u);
        let flags = Flags::short_block_if(n_eff);
        let value = match (scheme, u) {
            (AccessScheme::Noma, User::Two) => {
                exact_noma_user2_outage(k(u), n_eff, powers, unit, model)?
            }
            _ => exact_fading_outage(k(u), n_eff, powers.get(u), unit)?,
        };
        Ok(Flagged::new(value, flags))
    };
    Ok([user(User::One)?, user(User::Two)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_lin() -> QLinearization {
        linearize(500.0, 500.0, SnrLinear::new(10.0).unwrap(), RateUnit::Nats)
            .unwrap()
            .value
    }

    fn powers(p1: f64, p2: f64) -> LinkPowers {
        LinkPowers::new(SnrLinear::new(p1).unwrap(), SnrLinear::new(p2).unwrap())
    }

    #[test]
    fn linearize_anchor() {
        let lin = canonical_lin();
        // mpmath: theta = (e - 1)/10, b = sqrt(50000/(e^2 - 1))
        assert!((lin.theta - 0.171_828_182_845_904_5).abs() < 1e-15);
        assert!((lin.b - 88.464_016_060_109_34).abs() < 1e-10);
        assert!((lin.half_width() - 0.014_167_502_145_323_146).abs() < 1e-15);
        assert!((lin.sigma - 0.157_660_680_700_581_38).abs() < 1e-14);
        assert!((lin.delta - 0.185_995_684_991_227_67).abs() < 1e-14);
        assert!(lin.sigma < lin.theta && lin.theta < lin.delta);
        assert!(linearize(500.0, 500.0, SnrLinear::ZERO, RateUnit::Nats).is_err());
    }

    #[test]
    fn theta_rho_depends_only_on_rate() {
        let a = linearize(300.0, 600.0, SnrLinear::new(3.0).unwrap(), RateUnit::Nats).unwrap();
        let b = linearize(150.0, 300.0, SnrLinear::new(17.0).unwrap(), RateUnit::Nats).unwrap();
        assert!((a.value.theta * 3.0 - b.value.theta * 17.0).abs() < 1e-14);
    }

    #[test]
    fn bits_payload_converts_to_nats() {
        let rho = SnrLinear::new(4.0).unwrap();
        let bits = linearize(500.0, 500.0, rho, RateUnit::Bits).unwrap().value;
        let nats = linearize(500.0 * std::f64::consts::LN_2, 500.0, rho, RateUnit::Nats)
            .unwrap()
            .value;
        assert_eq!(bits, nats);
    }

    #[test]
    fn surrogate_knees_and_pivot() {
        let lin = canonical_lin();
        assert_eq!(surrogate_w(&lin, lin.theta).value(), 0.5);
        assert_eq!(surrogate_w(&lin, lin.delta).value(), 0.0);
        assert_eq!(surrogate_w(&lin, lin.sigma).value(), 1.0);
        assert_eq!(surrogate_w(&lin, 0.0).value(), 1.0);
        assert_eq!(surrogate_w(&lin, 5.0).value(), 0.0);
        let quarter = surrogate_w(&lin, lin.theta + lin.half_width() / 2.0).value();
        assert!((quarter - 0.25).abs() < 1e-12);
        // Linear branch reaches the knee values continuously.
        let just_below = surrogate_w(&lin, lin.delta - 1e-12).value();
        assert!(just_below < 1e-9);
    }

    #[test]
    fn oma_fading_outage_anchor() {
        let lin = canonical_lin();
        let eps = oma_fading_outage(&lin).unwrap();
        // mpmath closed form 0.157847976068978
        assert!((eps.value.value() - 0.157_847_976_068_978_13).abs() < 1e-13);
        assert!(eps.flags.is_empty());
        let quad = surrogate_expectation(&lin, unit_exponential, &QuadratureOptions::default().with_abs_tol(1e-14))
            .unwrap();
        assert!((quad - eps.value.value()).abs() < 1e-12);
    }

    #[test]
    fn negative_knee_falls_back_to_quadrature() {
        let lin = linearize(1.0, 500.0, SnrLinear::new(10.0).unwrap(), RateUnit::Nats)
            .unwrap()
            .value;
        assert!(lin.sigma < 0.0);
        let eps = oma_fading_outage(&lin).unwrap();
        assert!(eps.flags.contains(Flags::SURROGATE_QUADRATURE));
        assert!(eps.value.value() < 1e-3);
        let tinier = linearize(0.01, 500.0, SnrLinear::new(10.0).unwrap(), RateUnit::Nats)
            .unwrap()
            .value;
        assert!(oma_fading_outage(&tinier).unwrap().value.value() < eps.value.value());
    }

    #[test]
    fn exact_outage_anchor() {
        let rho = SnrLinear::new(10.0).unwrap();
        let exact = exact_fading_outage(500.0, 500.0, rho, RateUnit::Nats).unwrap().value();
        // mpmath quadrature 0.158082153568215
        assert!((exact - 0.158_082_153_568_215_17).abs() < 1e-9);
        assert!((exact - 0.157_847_976).abs() < 0.02);
        let loud = exact_fading_outage(500.0, 500.0, SnrLinear::new(1e6).unwrap(), RateUnit::Nats)
            .unwrap()
            .value();
        assert!(loud < 1e-5);
    }

    #[test]
    fn exact_outage_mean_rate_anchor() {
        // Payload equal to the mean-rate capacity at unit gain: most of the
        // exponential mass below z = 1 fails.
        let rho = SnrLinear::new(10.0).unwrap();
        let k = 500.0 * 11f64.ln();
        let exact = exact_fading_outage(k, 500.0, rho, RateUnit::Nats).unwrap().value();
        assert!((exact - (1.0 - (-1f64).exp())).abs() < 0.01, "{exact}");
    }

    #[test]
    fn user2_density_normalizes() {
        let p = powers(10.0, 10.0);
        let total = integrate_to_infinity(
            |z| noma_user2_sinr_pdf(z, &p).unwrap(),
            0.0,
            &[1.0],
            &QuadratureOptions {
                tail_cutoff: 1e-13,
                abs_tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        // Heavy 1/z^2 tail: the truncated remainder is below the last segment's size.
        assert!((total.value - 1.0).abs() < 1e-10, "{}", total.value);
        assert_eq!(noma_user2_sinr_pdf(0.0, &p).unwrap(), 1.0);
        assert!((noma_user2_sinr_cdf(1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!(noma_user2_sinr_pdf(1.0, &powers(0.0, 1.0)).is_err());
    }

    #[test]
    fn user2_cdf_matches_integrated_pdf() {
        let p = powers(3.0, 7.0);
        for z in [0.1, 0.5, 1.0, 4.0, 30.0] {
            let integral = integrate(|s| noma_user2_sinr_pdf(s, &p).unwrap(), 0.0, z, &[], &QuadratureOptions::default())
                .unwrap()
                .value;
            assert!((integral - noma_user2_sinr_cdf(z, &p).unwrap()).abs() < 1e-12);
            let fn_integral = integrate(|s| full_noise_sinr_pdf(s, &p), 0.0, z, &[], &QuadratureOptions::default())
                .unwrap()
                .value;
            assert!((fn_integral - full_noise_sinr_cdf(z, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn user2_closed_form_anchor() {
        let p = powers(10.0, 10.0);
        let lin = sinr_linearization(500.0, 500.0, RateUnit::Nats).unwrap().value;
        let closed = noma_user2_closed_form(&lin, &p).unwrap();
        // mpmath: grouped closed form and quadrature of W f both 0.631786909305439
        assert!((closed - 0.631_786_909_305_438_9).abs() < 1e-12);
        let eps = noma_user2_outage(&lin, &p).unwrap();
        assert!(eps.flags.is_empty());
        let exact = exact_noma_user2_outage(500.0, 500.0, &p, RateUnit::Nats, SinrModel::InterferenceLimited)
            .unwrap()
            .value();
        assert!((exact - 0.631_902_777_783_477_3).abs() < 1e-9);
        let full = exact_noma_user2_outage(500.0, 500.0, &p, RateUnit::Nats, SinrModel::FullNoise)
            .unwrap()
            .value();
        assert!((full - 0.689_946_929_976_509_1).abs() < 1e-9);
    }

    #[test]
    fn user2_more_power_less_outage() {
        let lin = sinr_linearization(500.0, 500.0, RateUnit::Nats).unwrap().value;
        let mut last = 1.0;
        for p2 in [1.0, 10.0, 100.0, 1e4] {
            let eps = noma_user2_outage(&lin, &powers(10.0, p2)).unwrap().value.value();
            assert!(eps < last);
            last = eps;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn scheme_level_outages() {
        let cfg = FrameConfig::new(500, 500, 0.8).unwrap();
        let p = powers(10.0, 10.0);
        let [n1, n2] = linearized_outage(AccessScheme::Noma, &cfg, &p, RateUnit::Nats).unwrap();
        assert!((n1.value.value() - 0.157_847_976_068_978_13).abs() < 1e-13);
        assert!((n2.value.value() - 0.631_786_909_305_438_9).abs() < 1e-12);
        let [o1, o2] = linearized_outage(AccessScheme::Oma, &cfg, &p, RateUnit::Nats).unwrap();
        // mpmath: 0.220389706262762, 0.999999332382938
        assert!((o1.value.value() - 0.220_389_706_262_762).abs() < 1e-12);
        assert!((o2.value.value() - 0.999_999_332_382_938_2).abs() < 1e-12);
        let [e1, e2] = exact_outage(AccessScheme::Oma, &cfg, &p, RateUnit::Nats, SinrModel::InterferenceLimited)
            .unwrap();
        assert!((e1.value.value() - 0.220_705_665_651_503_2).abs() < 1e-9);
        assert!((e2.value.value() - 0.999_999_022_706_101_7).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn closed_form_is_exact_surrogate_integral(
            k in 20.0f64..3000.0,
            n in 100.0f64..3000.0,
            rho_db in -10.0f64..40.0,
        ) {
            let rho = SnrLinear::from_db(rho_db).unwrap();
            let lin = linearize(k, n, rho, RateUnit::Nats).unwrap().value;
            proptest::prop_assume!(lin.sigma >= 0.0);
            let closed = oma_fading_outage(&lin).unwrap().value.value();
            let opts = QuadratureOptions::default().with_abs_tol(1e-14);
            let quad = surrogate_expectation(&lin, unit_exponential, &opts).unwrap();
            proptest::prop_assert!((closed - quad).abs() < 1e-12, "{closed} vs {quad}");
        }

        #[test]
        fn user2_outage_is_probability(
            k in 20.0f64..3000.0,
            n in 100.0f64..3000.0,
            p1_db in -10.0f64..30.0,
            p2_db in -10.0f64..30.0,
        ) {
            let p = LinkPowers::from_db(p1_db, p2_db).unwrap();
            let lin = sinr_linearization(k, n, RateUnit::Nats).unwrap().value;
            let eps = noma_user2_outage(&lin, &p).unwrap();
            proptest::prop_assert!(!eps.flags.contains(Flags::CLOSED_FORM_MISMATCH));
            let v = eps.value.value();
            proptest::prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
