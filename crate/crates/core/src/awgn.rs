//! Per-user rates, outage and throughput over the AWGN channel.
//!
//! Under OMA user 1 owns `beta * n` of the frame's channel uses and user 2
//! the rest. Under NOMA both users occupy all `n` uses. The receiver decodes
//! user 2 first, cancels it, then decodes user 1 interference-free.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::Flagged;
use crate::numerics::{achievable_rate, awgn_error_prob, Probability, RatePerChannelUse, SnrLinear};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessScheme {
    Noma,
    Oma,
}

impl AccessScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessScheme::Noma => "noma",
            AccessScheme::Oma => "oma",
        }
    }
}

impl fmt::Display for AccessScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccessScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "noma" => Ok(AccessScheme::Noma),
            "oma" => Ok(AccessScheme::Oma),
            other => Err(format!("unknown access scheme `{other}`")),
        }
    }
}

/// User 1 has priority: it is decoded last under NOMA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<User> {
        match n {
            1 => Some(User::One),
            2 => Some(User::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Information bits per packet (user 1, and user 2 unless `k2` is set).
    pub k: u32,
    /// Channel uses in the frame.
    pub n: u32,
    /// User 1's share of the frame under OMA.
    pub beta: f64,
    /// Optional distinct payload for user 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<u32>,
}

impl FrameConfig {
    pub fn new(k: u32, n: u32, beta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("k", 0.0, "payload must be at least one bit"));
        }
        if n == 0 {
            return Err(Error::domain("n", 0.0, "frame must have at least one channel use"));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::domain("beta", beta, "resource split must lie in [0, 1]"));
        }
        Ok(FrameConfig { k, n, beta, k2: None })
    }

    pub fn payload(&self, user: User) -> u32 {
        match user {
            User::One => self.k,
            User::Two => self.k2.unwrap_or(self.k),
        }
    }

    /// Channel uses available to `user` under `scheme`.
    pub fn channel_uses(&self, scheme: AccessScheme, user: User) -> f64 {
        let n = f64::from(self.n);
        match (scheme, user) {
            (AccessScheme::Noma, _) => n,
            (AccessScheme::Oma, User::One) => self.beta * n,
            // n - beta*n stays exact where (1 - beta)*n rounds below an integer.
            (AccessScheme::Oma, User::Two) => n - self.beta * n,
        }
    }

    pub fn check_oma_split(&self) -> Result<()> {
        if self.beta <= 0.0 || self.beta >= 1.0 {
            return Err(Error::domain(
                "beta",
                self.beta,
                "OMA needs a split strictly inside (0, 1)",
            ));
        }
        Ok(())
    }
}

/// Per-user transmit SNRs over unit-variance noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    pub p1: SnrLinear,
    pub p2: SnrLinear,
}

impl LinkPowers {
    pub fn new(p1: SnrLinear, p2: SnrLinear) -> Self {
        LinkPowers { p1, p2 }
    }

    pub fn from_db(p1_db: f64, p2_db: f64) -> Result<Self> {
        Ok(LinkPowers {
            p1: SnrLinear::from_db(p1_db)?,
            p2: SnrLinear::from_db(p2_db)?,
        })
    }

    pub fn get(&self, user: User) -> SnrLinear {
        match user {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }

    /// The same configuration with the users' roles exchanged.
    pub fn swapped(&self) -> Self {
        LinkPowers {
            p1: self.p2,
            p2: self.p1,
        }
    }
}

/// Per-user achievable rates under OMA at target error probability `eps`.
pub fn oma_rates(
    cfg: &FrameConfig,
    powers: &LinkPowers,
    eps: Probability,
) -> Result<[Flagged<RatePerChannelUse>; 2]> {
    cfg.check_oma_split()?;
    Ok([
        achievable_rate(cfg.channel_uses(AccessScheme::Oma, User::One), eps, powers.p1)?,
        achievable_rate(cfg.channel_uses(AccessScheme::Oma, User::Two), eps, powers.p2)?,
    ])
}

/// Per-user packet error probabilities under OMA. Each user must deliver its
/// whole payload inside its own share of the frame.
pub fn oma_outage(
    cfg: &FrameConfig,
    powers: &LinkPowers,
    half_log_correction: bool,
) -> Result<[Flagged<Probability>; 2]> {
    cfg.check_oma_split()?;
    let user = |u: User| {
        awgn_error_prob(
            f64::from(cfg.payload(u)),
            cfg.channel_uses(AccessScheme::Oma, u),
            powers.get(u),
            half_log_correction,
        )
    };
    Ok([user(User::One)?, user(User::Two)?])
}

/// Post-SIC SINRs: user 1 sees no interference, user 2 sees user 1 as noise.
pub fn noma_sinrs(powers: &LinkPowers) -> (SnrLinear, SnrLinear) {
    let rho2 = powers.p2.value() / (1.0 + powers.p1.value());
    (powers.p1, SnrLinear::new(rho2).expect("ratio of non-negative powers"))
}

/// Per-user packet error probabilities under NOMA; both users code over the
/// full frame at their post-SIC SINRs.
pub fn noma_outage(
    cfg: &FrameConfig,
    powers: &LinkPowers,
    half_log_correction: bool,
) -> Result<[Flagged<Probability>; 2]> {
    let (rho1, rho2) = noma_sinrs(powers);
    let n = f64::from(cfg.n);
    Ok([
        awgn_error_prob(f64::from(cfg.payload(User::One)), n, rho1, half_log_correction)?,
        awgn_error_prob(f64::from(cfg.payload(User::Two)), n, rho2, half_log_correction)?,
    ])
}

pub fn outage(
    scheme: AccessScheme,
    cfg: &FrameConfig,
    powers: &LinkPowers,
    half_log_correction: bool,
) -> Result<[Flagged<Probability>; 2]> {
    match scheme {
        AccessScheme::Oma => oma_outage(cfg, powers, half_log_correction),
        AccessScheme::Noma => noma_outage(cfg, powers, half_log_correction),
    }
}

/// Expected delivered bits per channel use of the frame, `(k/n)(1 - eps)`.
///
/// Both OMA users divide by the full frame length `n`.
pub fn throughput(k: f64, n: f64, eps: Probability) -> f64 {
    (k / n) * (1.0 - eps.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{capacity, dispersion, RateUnit};
    use proptest::prelude::*;

    fn canonical() -> (FrameConfig, LinkPowers) {
        (
            FrameConfig::new(500, 500, 0.8).unwrap(),
            LinkPowers::from_db(10.0, 10.0).unwrap(),
        )
    }

    #[test]
    fn oma_rates_symmetry_and_zero_penalty() {
        let cfg = FrameConfig::new(500, 500, 0.5).unwrap();
        let p = LinkPowers::from_db(7.0, 7.0).unwrap();
        let [r1, r2] = oma_rates(&cfg, &p, Probability::new(1e-3).unwrap()).unwrap();
        assert_eq!(r1.value.value, r2.value.value);
        let [h1, h2] = oma_rates(&cfg, &p, Probability::HALF).unwrap();
        let c = capacity(p.p1, RateUnit::Bits).value;
        assert_eq!(h1.value.value, c);
        assert_eq!(h2.value.value, c);
    }

    #[test]
    fn oma_rate_user1_uses_its_share() {
        let (cfg, p) = canonical();
        let [r1, _] = oma_rates(&cfg, &p, Probability::new(1e-3).unwrap()).unwrap();
        // mpmath: C(10) - sqrt(V(10)/400) Q^-1(1e-3)
        assert!((r1.value.value - 3.237_441_517_218_223).abs() < 1e-9);
        let by_hand = capacity(p.p1, RateUnit::Bits).value
            - (dispersion(p.p1, RateUnit::Bits) / 400.0).sqrt() * 3.090_232_306_167_813_5;
        assert!((r1.value.value - by_hand).abs() < 1e-12);
    }

    #[test]
    fn oma_rejects_degenerate_split() {
        let p = LinkPowers::from_db(10.0, 10.0).unwrap();
        for beta in [0.0, 1.0] {
            let cfg = FrameConfig::new(500, 500, beta).unwrap();
            assert!(oma_rates(&cfg, &p, Probability::HALF).is_err());
            assert!(oma_outage(&cfg, &p, false).is_err());
        }
        assert!(FrameConfig::new(500, 500, 1.5).is_err());
    }

    #[test]
    fn oma_outage_anchors() {
        let (cfg, p) = canonical();
        let [e1, e2] = oma_outage(&cfg, &p, false).unwrap();
        // arguments 30.757 and -10.723
        assert!(e1.value.value() < 1e-200);
        assert!(e2.value.value() > 1.0 - 1e-15);
        // Too little share for the payload pushes the argument negative.
        let starved = FrameConfig::new(500, 500, 0.2).unwrap();
        let [s1, _] = oma_outage(&starved, &p, false).unwrap();
        assert!(s1.value.value() > 0.5);
    }

    #[test]
    fn noma_sinr_anchors() {
        let p = LinkPowers::new(SnrLinear::new(10.0).unwrap(), SnrLinear::new(10.0).unwrap());
        let (r1, r2) = noma_sinrs(&p);
        assert_eq!(r1.value(), 10.0);
        assert!((r2.value() - 10.0 / 11.0).abs() < 1e-15);
        let quiet1 = LinkPowers::new(SnrLinear::ZERO, SnrLinear::new(4.0).unwrap());
        assert_eq!(noma_sinrs(&quiet1).1.value(), 4.0);
        let quiet2 = LinkPowers::new(SnrLinear::new(4.0).unwrap(), SnrLinear::ZERO);
        assert_eq!(noma_sinrs(&quiet2).1.value(), 0.0);
    }

    #[test]
    fn noma_outage_anchors() {
        let (cfg, p) = canonical();
        let [_, e2] = noma_outage(&cfg, &p, false).unwrap();
        // mpmath oracle: argument -1.22115, Q = 0.888985461980654
        assert!((e2.value.value() - 0.888_985_461_980_654_4).abs() < 1e-12);
        let small = FrameConfig::new(100, 500, 0.8).unwrap();
        let [_, s2] = noma_outage(&small, &p, false).unwrap();
        // argument 13.3349, Q = 7.2485e-41
        assert!((s2.value.value() / 7.248_528_011_713_111e-41 - 1.0).abs() < 1e-9);
        let [n1, _] = noma_outage(&cfg, &p, false).unwrap();
        let [o1, _] = oma_outage(&cfg, &p, false).unwrap();
        assert!(n1.value.value() <= o1.value.value());
    }

    #[test]
    fn throughput_anchors() {
        assert_eq!(throughput(500.0, 500.0, Probability::ZERO), 1.0);
        assert_eq!(throughput(500.0, 500.0, Probability::ONE), 0.0);
        let t = throughput(500.0, 500.0, Probability::new(0.924).unwrap());
        assert!((t - 0.076).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn noma_user1_never_worse(k in 50u32..2000, n in 100u32..2000, beta in 0.05f64..0.95, p_db in -5.0f64..30.0) {
            let cfg = FrameConfig::new(k, n, beta).unwrap();
            let p = LinkPowers::from_db(p_db, p_db).unwrap();
            let [noma1, _] = noma_outage(&cfg, &p, false).unwrap();
            let [oma1, _] = oma_outage(&cfg, &p, false).unwrap();
            prop_assert!(noma1.value.value() <= oma1.value.value());
        }

        #[test]
        fn oma_relabel_symmetry(k in 50u32..2000, n in 100u32..2000, beta in 0.05f64..0.95, p1 in -5.0f64..30.0, p2 in -5.0f64..30.0) {
            let cfg = FrameConfig::new(k, n, beta).unwrap();
            let mirrored = FrameConfig::new(k, n, 1.0 - beta).unwrap();
            let p = LinkPowers::from_db(p1, p2).unwrap();
            let [a1, a2] = oma_outage(&cfg, &p, false).unwrap();
            let [b1, b2] = oma_outage(&mirrored, &p.swapped(), false).unwrap();
            // 1 - beta is not exact in floating point, so compare loosely.
            prop_assert!((a1.value.value() - b2.value.value()).abs() <= 1e-9);
            prop_assert!((a2.value.value() - b1.value.value()).abs() <= 1e-9);
        }

        #[test]
        fn throughput_bounds(k in 1.0f64..5000.0, n in 1.0f64..5000.0, eps in 0.0f64..=1.0) {
            let t = throughput(k, n, Probability::new(eps).unwrap());
            prop_assert!(t >= 0.0 && t <= k / n);
            if eps == 0.0 {
                prop_assert_eq!(t, k / n);
            } else if eps > 1e-15 {
                prop_assert!(t < k / n);
            }
        }

        #[test]
        fn noma_sinr_interference(p1 in 1e-3f64..1e3, p2 in 1e-3f64..1e3) {
            let p = LinkPowers::new(SnrLinear::new(p1).unwrap(), SnrLinear::new(p2).unwrap());
            let (_, r2) = noma_sinrs(&p);
            prop_assert!(r2.value() < p2);
            let louder = LinkPowers::new(SnrLinear::new(p1 * 2.0).unwrap(), p.p2);
            prop_assert!(noma_sinrs(&louder).1.value() < r2.value());
        }
    }
}
