//! Monte Carlo estimates of outage and ARQ statistics.
//!
//! Trials are split into fixed-size chunks. Chunk `c` draws from its own
//! xoshiro256++ stream seeded with `seed ^ (c * 0x9E3779B97F4A7C15)` through
//! SplitMix64, and chunk statistics are merged in chunk order, so results
//! do not depend on the number of worker threads.

use std::str::FromStr;

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::arq::ArqPolicy;
use crate::awgn::{AccessScheme, FrameConfig, LinkPowers, User};
use crate::error::{Error, Result};
use crate::fading::SinrModel;
use crate::numerics::{conditional_error, RateUnit};

/// Identifier written to output metadata so streams can be replicated.
pub const RNG_ALGORITHM: &str = "xoshiro256++ (seed_from_u64: splitmix64), chunk stream seed ^ chunk*0x9E3779B97F4A7C15, uniform = (x >> 11) * 2^-53";

/// Trials drawn from one RNG stream.
pub const CHUNK_TRIALS: u64 = 65_536;

const STREAM_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Awgn,
    #[default]
    Rayleigh,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Awgn => "awgn",
            Channel::Rayleigh => "rayleigh",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(Channel::Awgn),
            "rayleigh" => Ok(Channel::Rayleigh),
            other => Err(Error::Parse(format!("unknown channel `{other}`"))),
        }
    }
}

/// How a single realization contributes to the outage estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Average the conditional error probability itself.
    #[default]
    Smooth,
    /// Average a failure indicator drawn with the conditional error probability.
    Bernoulli,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Smooth => "smooth",
            Estimator::Bernoulli => "bernoulli",
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(Estimator::Smooth),
            "bernoulli" => Ok(Estimator::Bernoulli),
            other => Err(Error::Parse(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub scheme: AccessScheme,
    pub channel: Channel,
    pub frame: FrameConfig,
    pub powers: LinkPowers,
    pub policy: Option<ArqPolicy>,
    pub sinr_model: SinrModel,
    pub unit: RateUnit,
    pub estimator: Estimator,
    pub half_log_correction: bool,
}

impl SimConfig {
    pub fn new(scheme: AccessScheme, channel: Channel, frame: FrameConfig, powers: LinkPowers) -> Self {
        SimConfig {
            trials: 100_000,
            seed: 0,
            scheme,
            channel,
            frame,
            powers,
            policy: None,
            sinr_model: SinrModel::default(),
            unit: match channel {
                Channel::Awgn => RateUnit::Bits,
                Channel::Rayleigh => RateUnit::Nats,
            },
            estimator: Estimator::default(),
            half_log_correction: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if self.scheme == AccessScheme::Oma {
            self.frame.check_oma_split()?;
        }
        let interference_limited = self.scheme == AccessScheme::Noma
            && self.channel == Channel::Rayleigh
            && self.sinr_model == SinrModel::InterferenceLimited;
        if interference_limited && self.powers.p1.value() == 0.0 {
            return Err(Error::domain(
                "p1",
                0.0,
                "interference-limited SINR needs a positive interferer",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Estimate {
    /// `|mean - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.mean - reference).abs();
        if self.std_error == 0.0 {
            if gap == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            gap / self.std_error
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArqEstimate {
    pub throughput: Estimate,
    pub mean_channel_uses: Estimate,
    pub residual_outage: Estimate,
}

/// Running means and co-moments of a `D`-dimensional sample.
#[derive(Debug, Clone, Copy)]
struct Moments<const D: usize> {
    count: u64,
    mean: [f64; D],
    comoment: [[f64; D]; D],
}

#[allow(clippy::needless_range_loop)]
impl<const D: usize> Moments<D> {
    fn new() -> Self {
        Moments {
            count: 0,
            mean: [0.0; D],
            comoment: [[0.0; D]; D],
        }
    }

    fn push(&mut self, x: [f64; D]) {
        self.count += 1;
        let n = self.count as f64;
        let mut before = [0.0; D];
        for i in 0..D {
            before[i] = x[i] - self.mean[i];
            self.mean[i] += before[i] / n;
        }
        for i in 0..D {
            for j in 0..D {
                self.comoment[i][j] += before[i] * (x[j] - self.mean[j]);
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let mut delta = [0.0; D];
        for i in 0..D {
            delta[i] = other.mean[i] - self.mean[i];
            self.mean[i] += delta[i] * nb / n;
        }
        for i in 0..D {
            for j in 0..D {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        self.count += other.count;
    }

    fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.comoment[i][j] / (self.count - 1) as f64
        }
    }

    fn estimate(&self, i: usize) -> Estimate {
        Estimate {
            mean: self.mean[i],
            std_error: (self.covariance(i, i) / self.count as f64).sqrt(),
            trials: self.count,
        }
    }

    /// Ratio of means `mean[num] / mean[den]` with a delta-method standard error.
    fn ratio(&self, num: usize, den: usize) -> Estimate {
        let (a, b) = (self.mean[num], self.mean[den]);
        let r = if b > 0.0 { a / b } else { 0.0 };
        let var = self.covariance(num, num) - 2.0 * r * self.covariance(num, den)
            + r * r * self.covariance(den, den);
        let se = if b > 0.0 {
            (var.max(0.0) / self.count as f64).sqrt() / b
        } else {
            0.0
        };
        Estimate {
            mean: r,
            std_error: se,
            trials: self.count,
        }
    }
}

struct Stream(Xoshiro256PlusPlus);

impl Stream {
    fn for_chunk(seed: u64, chunk: u64) -> Self {
        Stream(Xoshiro256PlusPlus::seed_from_u64(
            seed ^ chunk.wrapping_mul(STREAM_STRIDE),
        ))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-mean exponential (squared Rayleigh envelope).
    fn exponential(&mut self) -> f64 {
        -(-self.uniform()).ln_1p()
    }
}

/// Conditional error of `user` given squared envelopes `z1`, `z2`.
fn conditional_user_error(cfg: &SimConfig, user: User, z1: f64, z2: f64) -> f64 {
    let n_eff = cfg.frame.channel_uses(cfg.scheme, user);
    let mut payload = f64::from(cfg.frame.payload(user));
    if cfg.half_log_correction {
        payload -= match cfg.unit {
            RateUnit::Bits => 0.5 * n_eff.log2(),
            RateUnit::Nats => 0.5 * n_eff.ln(),
        };
    }
    let p = &cfg.powers;
    let snr = match (cfg.scheme, user) {
        (AccessScheme::Noma, User::Two) => match cfg.channel {
            Channel::Awgn => SinrModel::FullNoise.sinr(p, z1, z2),
            Channel::Rayleigh => cfg.sinr_model.sinr(p, z1, z2),
        },
        (_, User::One) => p.p1.value() * z1,
        (AccessScheme::Oma, User::Two) => p.p2.value() * z2,
    };
    conditional_error(payload, n_eff, snr, cfg.unit)
}

fn draw_envelopes(cfg: &SimConfig, rng: &mut Stream) -> (f64, f64) {
    match cfg.channel {
        Channel::Awgn => (1.0, 1.0),
        Channel::Rayleigh => (rng.exponential(), rng.exponential()),
    }
}

fn chunk_count(trials: u64) -> u64 {
    trials.div_ceil(CHUNK_TRIALS)
}

fn chunk_len(trials: u64, chunk: u64) -> u64 {
    (trials - chunk * CHUNK_TRIALS).min(CHUNK_TRIALS)
}

/// Runs `work` on every chunk and merges the results in chunk order.
fn run_chunks<T, W, M>(trials: u64, work: W, merge: M, empty: T) -> T
where
    T: Send,
    W: Fn(u64) -> T + Sync + Send,
    M: Fn(&mut T, &T),
{
    let chunks = chunk_count(trials);
    #[cfg(feature = "parallel")]
    let parts: Vec<T> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(&work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<T> = (0..chunks).map(&work).collect();
    let mut total = empty;
    for part in &parts {
        merge(&mut total, part);
    }
    total
}

/// Estimates both users' outage probabilities.
///
/// Over AWGN the envelopes are fixed at one; the smooth estimator then
/// returns the analytic error probability with zero spread.
pub fn simulate_outage(cfg: &SimConfig) -> Result<[Estimate; 2]> {
    cfg.validate()?;
    let moments = run_chunks(
        cfg.trials,
        |chunk| {
            let mut rng = Stream::for_chunk(cfg.seed, chunk);
            let mut m = Moments::<2>::new();
            for _ in 0..chunk_len(cfg.trials, chunk) {
                let (z1, z2) = draw_envelopes(cfg, &mut rng);
                let mut sample = [0.0; 2];
                for user in User::BOTH {
                    let q = conditional_user_error(cfg, user, z1, z2);
                    sample[user.index()] = match cfg.estimator {
                        Estimator::Smooth => q,
                        Estimator::Bernoulli => f64::from(u8::from(rng.uniform() < q)),
                    };
                }
                m.push(sample);
            }
            m
        },
        |a, b| a.merge(b),
        Moments::new(),
    );
    Ok([moments.estimate(0), moments.estimate(1)])
}

/// Simulates type-I ARQ episodes for both users.
///
/// Each round draws fresh fading and fails with the conditional error
/// probability. Every transmitted round costs the frame length `n`, and
/// every round below the cap waits `D` uses for its acknowledgement.
pub fn simulate_arq(cfg: &SimConfig) -> Result<[ArqEstimate; 2]> {
    cfg.validate()?;
    let policy = cfg
        .policy
        .ok_or_else(|| Error::InvalidSpec("ARQ simulation needs a policy".into()))?;
    let n = f64::from(cfg.frame.n);
    let d = f64::from(policy.feedback_delay);
    let moments = run_chunks(
        cfg.trials,
        |chunk| {
            let mut rng = Stream::for_chunk(cfg.seed, chunk);
            // Per user: delivered bits, channel uses, residual failure.
            let mut m = [Moments::<3>::new(), Moments::<3>::new()];
            for _ in 0..chunk_len(cfg.trials, chunk) {
                let mut uses = [0.0; 2];
                let mut done = [false; 2];
                for round in 1..=policy.m_max {
                    let (z1, z2) = draw_envelopes(cfg, &mut rng);
                    for user in User::BOTH {
                        let i = user.index();
                        // Draw for both users every round to keep streams aligned.
                        let u = rng.uniform();
                        if done[i] {
                            continue;
                        }
                        uses[i] += n;
                        if round < policy.m_max {
                            uses[i] += d;
                        }
                        done[i] = u >= conditional_user_error(cfg, user, z1, z2);
                    }
                    if done.iter().all(|&x| x) {
                        break;
                    }
                }
                for user in User::BOTH {
                    let i = user.index();
                    let k = f64::from(cfg.frame.payload(user));
                    let delivered = if done[i] { k } else { 0.0 };
                    m[i].push([delivered, uses[i], f64::from(u8::from(!done[i]))]);
                }
            }
            m
        },
        |a, b| {
            a[0].merge(&b[0]);
            a[1].merge(&b[1]);
        },
        [Moments::new(), Moments::new()],
    );
    Ok(moments.map(|m| ArqEstimate {
        throughput: m.ratio(0, 1),
        mean_channel_uses: m.estimate(1),
        residual_outage: m.estimate(2),
    }))
}
