//! Type-I ARQ: up to `M` independent transmissions of the same packet, with
//! a feedback wait of `D` channel uses after each failed round.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Probability;

/// How the expected number of channel uses is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LatencyModel {
    /// `M n Σ_{i=1}^{M} ε^{i-1} + D (M-1) Σ_{i=1}^{M-1} ε^{i-1}`.
    #[default]
    PaperLiteral,
    /// `n Σ_{i=1}^{M} ε^{i-1} + D Σ_{i=1}^{M-1} ε^{i-1}`: expected air time
    /// plus expected feedback waits.
    ExpectedRounds,
    /// `(1 + (M-1) ε)(M n + D (M-1))`. Agrees with the literal form for
    /// `M <= 2` when `D = 0`; overcounts otherwise.
    PaperSimplified,
}

impl LatencyModel {
    pub const ALL: [LatencyModel; 3] = [
        LatencyModel::PaperLiteral,
        LatencyModel::ExpectedRounds,
        LatencyModel::PaperSimplified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LatencyModel::PaperLiteral => "paper-literal",
            LatencyModel::ExpectedRounds => "expected-rounds",
            LatencyModel::PaperSimplified => "paper-simplified",
        }
    }
}

impl fmt::Display for LatencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatencyModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LatencyModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown latency model `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArqPolicy {
    pub m_max: u32,
    pub feedback_delay: u32,
    pub latency_model: LatencyModel,
}

impl ArqPolicy {
    pub fn new(m_max: u32, feedback_delay: u32, latency_model: LatencyModel) -> Result<Self> {
        if m_max == 0 {
            return Err(Error::domain("m_max", 0.0, "at least one transmission is required"));
        }
        Ok(ArqPolicy {
            m_max,
            feedback_delay,
            latency_model,
        })
    }

    /// One transmission, no feedback.
    pub fn single_shot() -> Self {
        ArqPolicy {
            m_max: 1,
            feedback_delay: 0,
            latency_model: LatencyModel::default(),
        }
    }
}

impl Default for ArqPolicy {
    fn default() -> Self {
        ArqPolicy::single_shot()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArqOutcome {
    pub cumulative_outage: Probability,
    pub expected_channel_uses: f64,
    pub delivered_bits: f64,
    pub throughput: f64,
}

/// `Σ_{i=0}^{terms-1} eps^i`, summed term by term.
fn geometric_sum(eps: f64, terms: u32) -> f64 {
    let mut total = 0.0;
    let mut power = 1.0;
    for _ in 0..terms {
        total += power;
        power *= eps;
    }
    total
}

/// Probability that all `m` rounds fail: `eps^m`, with `eps^0 = 1`.
pub fn cumulative_outage(eps: Probability, m: u32) -> Probability {
    let p = eps.value().powi(m.min(i32::MAX as u32) as i32);
    Probability::clamped(p).expect("power of a probability stays in [0, 1]")
}

/// Expected number of channel uses spent on one packet.
pub fn expected_channel_uses(eps: Probability, n: f64, policy: &ArqPolicy) -> f64 {
    let m = policy.m_max;
    let e = eps.value();
    let d = f64::from(policy.feedback_delay);
    let mf = f64::from(m);
    match policy.latency_model {
        LatencyModel::PaperLiteral => {
            mf * n * geometric_sum(e, m) + d * (mf - 1.0) * geometric_sum(e, m - 1)
        }
        LatencyModel::ExpectedRounds => n * geometric_sum(e, m) + d * geometric_sum(e, m - 1),
        LatencyModel::PaperSimplified => (1.0 + (mf - 1.0) * e) * (mf * n + d * (mf - 1.0)),
    }
}

/// Expected payload bits delivered: `k (1 - eps^M)`.
pub fn delivered_bits(k: f64, eps: Probability, m_max: u32) -> f64 {
    k * cumulative_outage(eps, m_max).complement().value()
}

/// Delivered bits per expected channel use.
pub fn arq_throughput(k: f64, n: f64, eps: Probability, policy: &ArqPolicy) -> f64 {
    evaluate(k, n, eps, policy).throughput
}

pub fn evaluate(k: f64, n: f64, eps: Probability, policy: &ArqPolicy) -> ArqOutcome {
    let cumulative = cumulative_outage(eps, policy.m_max);
    let uses = expected_channel_uses(eps, n, policy);
    let bits = k * cumulative.complement().value();
    // Written as (k/n)(1 - eps^M)(n/uses) so a single shot reproduces
    // (k/n)(1 - eps) bit for bit.
    let throughput = if uses > 0.0 {
        (k / n) * cumulative.complement().value() * (n / uses)
    } else {
        0.0
    };
    ArqOutcome {
        cumulative_outage: cumulative,
        expected_channel_uses: uses,
        delivered_bits: bits,
        throughput,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    fn policy(m: u32, d: u32, model: LatencyModel) -> ArqPolicy {
        ArqPolicy::new(m, d, model).unwrap()
    }

    #[test]
    fn cumulative_outage_examples() {
        assert!((cumulative_outage(p(0.1578), 2).value() - 0.024_900_84).abs() < 1e-12);
        assert_eq!(cumulative_outage(p(0.3), 1).value(), 0.3);
        assert_eq!(cumulative_outage(p(0.3), 0).value(), 1.0);
        assert_eq!(cumulative_outage(p(0.0), 3).value(), 0.0);
    }

    #[test]
    fn channel_use_examples() {
        for model in LatencyModel::ALL {
            assert_eq!(expected_channel_uses(p(0.4), 500.0, &policy(1, 7, model)), 500.0);
        }
        let literal = expected_channel_uses(p(0.1578), 500.0, &policy(2, 0, LatencyModel::PaperLiteral));
        assert!((literal - 1157.8).abs() < 1e-9);
        let three = expected_channel_uses(p(0.2), 500.0, &policy(3, 0, LatencyModel::PaperLiteral));
        assert!((three - 1860.0).abs() < 1e-9);
        let simplified = expected_channel_uses(p(0.2), 500.0, &policy(3, 0, LatencyModel::PaperSimplified));
        assert!((simplified - 2100.0).abs() < 1e-9);
        let with_delay = expected_channel_uses(p(0.5), 100.0, &policy(3, 10, LatencyModel::ExpectedRounds));
        assert!((with_delay - (175.0 + 15.0)).abs() < 1e-12);
    }

    #[test]
    fn throughput_examples() {
        assert!((delivered_bits(500.0, p(0.1578), 2) - 487.549_58).abs() < 1e-9);
        assert_eq!(delivered_bits(500.0, p(0.0), 2), 500.0);
        assert_eq!(delivered_bits(500.0, p(1.0), 2), 0.0);
        let literal = arq_throughput(500.0, 500.0, p(0.1578), &policy(2, 0, LatencyModel::PaperLiteral));
        assert!((literal - 0.4211).abs() < 5e-5, "{literal}");
        let rounds = arq_throughput(500.0, 500.0, p(0.1578), &policy(2, 0, LatencyModel::ExpectedRounds));
        assert!((rounds - 0.8422).abs() < 5e-5, "{rounds}");
        assert!((rounds - 2.0 * literal).abs() < 1e-12);
    }

    #[test]
    fn simplified_matches_literal_up_to_two_rounds() {
        for m in 1..=2 {
            let a = expected_channel_uses(p(0.3), 400.0, &policy(m, 0, LatencyModel::PaperLiteral));
            let b = expected_channel_uses(p(0.3), 400.0, &policy(m, 0, LatencyModel::PaperSimplified));
            assert!((a - b).abs() < 1e-9);
        }
        // The shorthand also scales the single feedback wait by (1 + eps).
        let a = expected_channel_uses(p(0.3), 400.0, &policy(2, 40, LatencyModel::PaperLiteral));
        let b = expected_channel_uses(p(0.3), 400.0, &policy(2, 40, LatencyModel::PaperSimplified));
        assert!((b - a - 40.0 * 0.3).abs() < 1e-9);
    }

    #[test]
    fn rejects_zero_rounds() {
        assert!(ArqPolicy::new(0, 0, LatencyModel::PaperLiteral).is_err());
        assert_eq!("expected-rounds".parse::<LatencyModel>().unwrap(), LatencyModel::ExpectedRounds);
        assert!("chase".parse::<LatencyModel>().is_err());
    }

    proptest! {
        #[test]
        fn outage_decreases_in_rounds(eps in 1e-6f64..0.999_999, m in 1u32..8) {
            let a = cumulative_outage(p(eps), m).value();
            let b = cumulative_outage(p(eps), m + 1).value();
            prop_assert!(b < a);
        }

        #[test]
        fn literal_throughput_decreases_in_rounds(
            eps in 1e-6f64..0.999_999,
            m in 1u32..6,
            d in 0u32..200,
            n in 100.0f64..3000.0,
        ) {
            let a = arq_throughput(500.0, n, p(eps), &policy(m, d, LatencyModel::PaperLiteral));
            let b = arq_throughput(500.0, n, p(eps), &policy(m + 1, d, LatencyModel::PaperLiteral));
            prop_assert!(b < a, "{a} -> {b}");
        }

        #[test]
        fn uses_grow_with_delay_and_outage(
            eps in 1e-6f64..0.99,
            m in 2u32..6,
            d in 0u32..200,
        ) {
            for model in [LatencyModel::PaperLiteral, LatencyModel::ExpectedRounds] {
                let base = expected_channel_uses(p(eps), 500.0, &policy(m, d, model));
                prop_assert!(expected_channel_uses(p(eps), 500.0, &policy(m, d + 1, model)) > base);
                prop_assert!(expected_channel_uses(p(eps + 0.005), 500.0, &policy(m, d, model)) > base);
            }
        }

        #[test]
        fn models_agree_for_single_shot(eps in 0.0f64..=1.0, d in 0u32..500, n in 1.0f64..5000.0) {
            let reference = 500.0 / n * (1.0 - eps);
            for model in LatencyModel::ALL {
                let t = arq_throughput(500.0, n, p(eps), &policy(1, d, model));
                prop_assert_eq!(t, crate::awgn::throughput(500.0, n, p(eps)));
                prop_assert!((t - reference).abs() <= 1e-12 * reference.max(1.0));
            }
        }
    }
}
