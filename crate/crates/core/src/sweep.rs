//! Grid evaluation over one axis of the operating point, and throughput
//! maximization along that axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arq::{self, ArqPolicy, LatencyModel};
use crate::awgn::{self, AccessScheme, FrameConfig, LinkPowers, User};
use crate::error::{Error, Result};
use crate::fading::{self, SinrModel};
use crate::flags::{Flagged, Flags};
use crate::montecarlo::{self, Channel, Estimator, SimConfig};
use crate::numerics::{Probability, RateUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    K,
    N,
    PowerDb,
    Beta,
    MMax,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::K, Axis::N, Axis::PowerDb, Axis::Beta, Axis::MMax];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::N => "n",
            Axis::PowerDb => "power_db",
            Axis::Beta => "beta",
            Axis::MMax => "m_max",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Axis::K | Axis::N | Axis::MMax)
    }

    /// The coordinate of `record` along this axis.
    pub fn value_of(self, record: &ResultRecord) -> f64 {
        match self {
            Axis::K => f64::from(record.k),
            Axis::N => f64::from(record.n),
            Axis::PowerDb => record.p1_db,
            Axis::Beta => record.beta,
            Axis::MMax => f64::from(record.m_max),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown axis `{s}`")))
    }
}

/// Inclusive range given by a step or by a point count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl AxisRange {
    pub fn stepped(start: f64, stop: f64, step: f64) -> Self {
        AxisRange {
            start,
            stop,
            step: Some(step),
            count: None,
        }
    }

    pub fn counted(start: f64, stop: f64, count: usize) -> Self {
        AxisRange {
            start,
            stop,
            step: None,
            count: Some(count),
        }
    }

    pub fn single(value: f64) -> Self {
        AxisRange::counted(value, value, 1)
    }

    /// Grid points, rounded to integers on integer axes.
    pub fn values(&self, integer: bool) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::InvalidSpec(format!(
                "range [{}, {}] is empty or not finite",
                self.start, self.stop
            )));
        }
        let raw: Vec<f64> = match (self.step, self.count) {
            (Some(step), None) => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(Error::InvalidSpec(format!("step {step} must be positive")));
                }
                let span = (self.stop - self.start) / step;
                let last = (span + 1e-9).floor() as usize;
                (0..=last).map(|i| self.start + i as f64 * step).collect()
            }
            (None, Some(count)) => match count {
                0 => return Err(Error::InvalidSpec("count must be at least 1".into())),
                1 => vec![self.start],
                _ => {
                    let width = self.stop - self.start;
                    (0..count)
                        .map(|i| self.start + width * i as f64 / (count - 1) as f64)
                        .collect()
                }
            },
            _ => {
                return Err(Error::InvalidSpec(
                    "range needs exactly one of `step` and `count`".into(),
                ))
            }
        };
        let mut values: Vec<f64> = if integer {
            raw.into_iter().map(f64::round).collect()
        } else {
            raw
        };
        values.dedup();
        Ok(values)
    }

    /// Spacing of the grid, used as the initial refinement step.
    fn spacing(&self) -> f64 {
        match (self.step, self.count) {
            (Some(step), _) => step,
            (None, Some(count)) if count > 1 => (self.stop - self.start) / (count - 1) as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Epsilon,
    Throughput,
    Latency,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Epsilon => "epsilon",
            Metric::Throughput => "throughput",
            Metric::Latency => "latency",
        }
    }

    pub fn of(self, record: &ResultRecord) -> f64 {
        match self {
            Metric::Epsilon => record.epsilon,
            Metric::Throughput => record.throughput,
            Metric::Latency => record.expected_channel_uses,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    /// AWGN formulas; linearized closed forms under fading.
    ClosedForm,
    /// AWGN formulas; exact expectations by quadrature under fading.
    Quadrature,
    /// Simulated outage fed through the ARQ formulas.
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

impl Evaluator {
    pub const ALL: [Evaluator; 3] = [
        Evaluator::ClosedForm,
        Evaluator::Quadrature,
        Evaluator::MonteCarlo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Evaluator::ClosedForm => "closed_form",
            Evaluator::Quadrature => "quadrature",
            Evaluator::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Evaluator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Evaluator::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown evaluator `{s}`")))
    }
}

/// Every parameter of one evaluation. Powers are in dB here; they are
/// converted to linear scale once, when the point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatingPoint {
    pub k: u32,
    pub n: u32,
    pub beta: f64,
    pub p1_db: f64,
    pub p2_db: f64,
    pub m_max: u32,
    pub feedback_delay: u32,
    pub latency_model: LatencyModel,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        OperatingPoint {
            k: 500,
            n: 500,
            beta: 0.8,
            p1_db: 10.0,
            p2_db: 10.0,
            m_max: 1,
            feedback_delay: 0,
            latency_model: LatencyModel::PaperLiteral,
        }
    }
}

fn to_count(value: f64) -> u32 {
    if value <= 0.0 {
        0
    } else {
        value.round().min(f64::from(u32::MAX)) as u32
    }
}

impl OperatingPoint {
    /// A copy with `axis` set to `value`; the power axis moves both users.
    pub fn with_axis(mut self, axis: Axis, value: f64) -> Self {
        match axis {
            Axis::K => self.k = to_count(value),
            Axis::N => self.n = to_count(value),
            Axis::PowerDb => {
                self.p1_db = value;
                self.p2_db = value;
            }
            Axis::Beta => self.beta = value,
            Axis::MMax => self.m_max = to_count(value),
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSettings {
    pub trials: u64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        MonteCarloSettings {
            trials: 100_000,
            seed: 1,
            estimator: Estimator::Smooth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub channel: Channel,
    pub axis: Axis,
    pub range: AxisRange,
    pub fixed: OperatingPoint,
    pub schemes: Vec<AccessScheme>,
    /// OMA splits to evaluate; empty means `fixed.beta` (or the axis).
    pub oma_betas: Vec<f64>,
    /// ARQ caps to evaluate; empty means `fixed.m_max` (or the axis).
    pub m_values: Vec<u32>,
    pub metrics: Vec<Metric>,
    pub evaluators: Vec<Evaluator>,
    pub unit: RateUnit,
    pub sinr_model: SinrModel,
    pub half_log_correction: bool,
    pub montecarlo: MonteCarloSettings,
}

impl SweepSpec {
    /// Both schemes, closed-form throughput, payload unit matched to the channel.
    pub fn new(channel: Channel, axis: Axis, range: AxisRange) -> Self {
        SweepSpec {
            channel,
            axis,
            range,
            fixed: OperatingPoint::default(),
            schemes: vec![AccessScheme::Noma, AccessScheme::Oma],
            oma_betas: Vec::new(),
            m_values: Vec::new(),
            metrics: vec![Metric::Throughput],
            evaluators: vec![Evaluator::ClosedForm],
            unit: match channel {
                Channel::Awgn => RateUnit::Bits,
                Channel::Rayleigh => RateUnit::Nats,
            },
            sinr_model: SinrModel::InterferenceLimited,
            half_log_correction: false,
            montecarlo: MonteCarloSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.range.values(self.axis.is_integer())?;
        if self.schemes.is_empty() {
            return Err(Error::InvalidSpec("no access scheme selected".into()));
        }
        if self.evaluators.is_empty() {
            return Err(Error::InvalidSpec("no evaluator selected".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidSpec("no metric selected".into()));
        }
        if self.axis == Axis::Beta && !self.oma_betas.is_empty() {
            return Err(Error::InvalidSpec("`oma_betas` conflicts with a beta axis".into()));
        }
        if self.axis == Axis::MMax && !self.m_values.is_empty() {
            return Err(Error::InvalidSpec("`m_values` conflicts with an m_max axis".into()));
        }
        if let Some(b) = self.oma_betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::InvalidSpec(format!("OMA split {b} must lie in (0, 1)")));
        }
        if self.m_values.contains(&0) {
            return Err(Error::InvalidSpec("m_values must be at least 1".into()));
        }
        if self.evaluators.contains(&Evaluator::MonteCarlo) && self.montecarlo.trials == 0 {
            return Err(Error::InvalidSpec("Monte Carlo needs at least one trial".into()));
        }
        Ok(())
    }

    fn betas(&self) -> Vec<Option<f64>> {
        if self.oma_betas.is_empty() {
            vec![None]
        } else {
            self.oma_betas.iter().copied().map(Some).collect()
        }
    }

    fn ms(&self) -> Vec<Option<u32>> {
        if self.m_values.is_empty() {
            vec![None]
        } else {
            self.m_values.iter().copied().map(Some).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub scheme: AccessScheme,
    pub user: User,
    pub k: u32,
    pub n: u32,
    pub beta: f64,
    pub p1_db: f64,
    pub p2_db: f64,
    pub m_max: u32,
    pub latency_model: LatencyModel,
    pub evaluator: Evaluator,
    /// Residual outage after up to `m_max` transmissions.
    pub epsilon: f64,
    pub throughput: f64,
    pub expected_channel_uses: f64,
    pub flags: Flags,
}

impl ResultRecord {
    pub fn is_feasible(&self) -> bool {
        !self.flags.contains(Flags::INFEASIBLE)
    }
}

struct Task {
    point: OperatingPoint,
    scheme: AccessScheme,
    evaluator: Evaluator,
    seed: u64,
}

fn per_round_outage(
    spec: &SweepSpec,
    task: &Task,
    frame: &FrameConfig,
    powers: &LinkPowers,
) -> Result<[Flagged<Probability>; 2]> {
    let scheme = task.scheme;
    match (spec.channel, task.evaluator) {
        (_, Evaluator::MonteCarlo) => {
            let mut cfg = SimConfig::new(scheme, spec.channel, *frame, *powers);
            cfg.trials = spec.montecarlo.trials;
            cfg.seed = task.seed;
            cfg.estimator = spec.montecarlo.estimator;
            cfg.sinr_model = spec.sinr_model;
            cfg.unit = spec.unit;
            cfg.half_log_correction = spec.half_log_correction;
            let est = montecarlo::simulate_outage(&cfg)?;
            let flags = |u: User| Flags::short_block_if(frame.channel_uses(scheme, u));
            Ok([
                Flagged::new(Probability::clamped(est[0].mean)?, flags(User::One)),
                Flagged::new(Probability::clamped(est[1].mean)?, flags(User::Two)),
            ])
        }
        (Channel::Awgn, _) => {
            if spec.unit == RateUnit::Nats {
                return Err(Error::InvalidSpec("AWGN formulas take payloads in bits".into()));
            }
            awgn::outage(scheme, frame, powers, spec.half_log_correction)
        }
        (Channel::Rayleigh, Evaluator::ClosedForm) => {
            fading::linearized_outage(scheme, frame, powers, spec.unit)
        }
        (Channel::Rayleigh, Evaluator::Quadrature) => {
            fading::exact_outage(scheme, frame, powers, spec.unit, spec.sinr_model)
        }
    }
}

fn evaluate_task(spec: &SweepSpec, task: &Task) -> [ResultRecord; 2] {
    let p = task.point;
    let beta = p.beta;
    let record = |user: User, epsilon: f64, throughput: f64, uses: f64, flags: Flags| ResultRecord {
        scheme: task.scheme,
        user,
        k: p.k,
        n: p.n,
        beta,
        p1_db: p.p1_db,
        p2_db: p.p2_db,
        m_max: p.m_max,
        latency_model: p.latency_model,
        evaluator: task.evaluator,
        epsilon,
        throughput,
        expected_channel_uses: uses,
        flags,
    };

    let policy = ArqPolicy::new(p.m_max.max(1), p.feedback_delay, p.latency_model)
        .expect("cap raised to at least one");
    let outcome = FrameConfig::new(p.k, p.n, beta).and_then(|frame| {
        let powers = LinkPowers::from_db(p.p1_db, p.p2_db)?;
        if p.m_max == 0 {
            return Err(Error::domain("m_max", 0.0, "at least one transmission is required"));
        }
        Ok((frame, per_round_outage(spec, task, &frame, &powers)?))
    });
    let n = f64::from(p.n);
    match outcome {
        Ok((frame, eps)) => User::BOTH.map(|u| {
            let e = eps[u.index()];
            let k = f64::from(frame.payload(u));
            let arq = arq::evaluate(k, n, e.value, &policy);
            record(
                u,
                arq.cumulative_outage.value(),
                arq.throughput,
                arq.expected_channel_uses,
                e.flags,
            )
        }),
        Err(_) => User::BOTH.map(|u| {
            let uses = arq::expected_channel_uses(Probability::ONE, n, &policy);
            record(u, 1.0, 0.0, uses, Flags::INFEASIBLE | Flags::short_block_if(n))
        }),
    }
}

#[cfg(feature = "parallel")]
fn evaluate_all(spec: &SweepSpec, tasks: &[Task]) -> Vec<[ResultRecord; 2]> {
    use rayon::prelude::*;
    tasks.par_iter().map(|t| evaluate_task(spec, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_all(spec: &SweepSpec, tasks: &[Task]) -> Vec<[ResultRecord; 2]> {
    tasks.iter().map(|t| evaluate_task(spec, t)).collect()
}

const SEED_STRIDE: u64 = 0xD1B5_4A32_D192_ED03;

/// Evaluates every grid point for each scheme, OMA split, ARQ cap and
/// evaluator.
///
/// Records are ordered by axis value, then scheme (NOMA first), split,
/// user, cap and evaluator. Points whose inputs are out of domain yield
/// records flagged `infeasible` instead of aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRecord>> {
    spec.validate()?;
    let xs = spec.range.values(spec.axis.is_integer())?;
    let betas = spec.betas();
    let ms = spec.ms();

    let mut tasks = Vec::new();
    let mut keys = Vec::new();
    for (xi, &x) in xs.iter().enumerate() {
        let base = spec.fixed.with_axis(spec.axis, x);
        for &scheme in &spec.schemes {
            // NOMA ignores the split; it is evaluated once per point.
            let scheme_betas: &[Option<f64>] = match scheme {
                AccessScheme::Noma => &[None],
                AccessScheme::Oma => &betas,
            };
            for (bi, beta) in scheme_betas.iter().enumerate() {
                for (mi, m) in ms.iter().enumerate() {
                    for (ei, &evaluator) in spec.evaluators.iter().enumerate() {
                        let mut point = base;
                        if let Some(b) = beta {
                            point.beta = *b;
                        }
                        if let Some(m) = m {
                            point.m_max = *m;
                        }
                        let seed = spec
                            .montecarlo
                            .seed
                            .wrapping_add((tasks.len() as u64).wrapping_mul(SEED_STRIDE));
                        tasks.push(Task {
                            point,
                            scheme,
                            evaluator,
                            seed,
                        });
                        keys.push((xi, scheme, bi, mi, ei));
                    }
                }
            }
        }
    }

    let evaluated = evaluate_all(spec, &tasks);
    let mut keyed: Vec<_> = keys
        .into_iter()
        .zip(evaluated)
        .flat_map(|((xi, scheme, bi, mi, ei), pair)| {
            pair.into_iter()
                .map(move |r| ((xi, scheme, bi, r.user, mi, ei), r))
        })
        .collect();
    keyed.sort_by_key(|(key, _)| *key);
    let records: Vec<ResultRecord> = keyed.into_iter().map(|(_, r)| r).collect();
    for r in &records {
        let values = [r.epsilon, r.throughput, r.expected_channel_uses];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Consistency(format!("non-finite value in record {r:?}")));
        }
        if !(0.0..=1.0).contains(&r.epsilon) {
            return Err(Error::Consistency(format!("outage {} outside [0, 1]", r.epsilon)));
        }
    }
    Ok(records)
}

/// Maximizes `f` over a grid, then refines around the best point by
/// halving the step.
///
/// `f` returns `None` at infeasible points. Ties go to the smaller axis
/// value. Refinement stops once the step drops below one on integer axes,
/// or below `1e-3` relative to the current point on real axes; candidates
/// stay inside `[lower, upper]`.
pub fn refined_argmax<F>(
    grid: &[f64],
    initial_step: f64,
    integer: bool,
    bounds: (f64, f64),
    f: F,
) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
{
    let better = |cand: (f64, f64), best: Option<(f64, f64)>| match best {
        None => true,
        Some((bx, by)) => cand.1 > by || (cand.1 == by && cand.0 < bx),
    };
    let mut best: Option<(f64, f64)> = None;
    for &x in grid {
        if let Some(y) = f(x).filter(|y| y.is_finite()) {
            if better((x, y), best) {
                best = Some((x, y));
            }
        }
    }
    let (mut bx, mut by) = best?;
    let (lower, upper) = bounds;
    let mut step = initial_step;
    loop {
        step = if integer { (step / 2.0).floor() } else { step / 2.0 };
        let done = if integer {
            step < 1.0
        } else {
            step <= 0.0 || step < 1e-3 * bx.abs().max(f64::MIN_POSITIVE)
        };
        if done {
            break;
        }
        for cand in [bx - step, bx + step] {
            if cand < lower || cand > upper {
                continue;
            }
            if let Some(y) = f(cand).filter(|y| y.is_finite()) {
                if better((cand, y), Some((bx, by))) {
                    bx = cand;
                    by = y;
                }
            }
        }
    }
    Some((bx, by))
}

/// Selects one curve of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveTarget {
    pub scheme: AccessScheme,
    pub user: User,
    /// OMA split; `None` takes the first configured one.
    pub beta: Option<f64>,
    /// ARQ cap; `None` takes the first configured one.
    pub m_max: Option<u32>,
}

impl CurveTarget {
    pub fn new(scheme: AccessScheme, user: User) -> Self {
        CurveTarget {
            scheme,
            user,
            beta: None,
            m_max: None,
        }
    }
}

/// Axis value maximizing the throughput of `target`, with the throughput.
///
/// The first configured evaluator is used. Points flagged `infeasible`
/// do not compete.
pub fn argmax_throughput(spec: &SweepSpec, target: CurveTarget) -> Result<(f64, f64)> {
    spec.validate()?;
    if !spec.metrics.contains(&Metric::Throughput) {
        return Err(Error::InvalidSpec("argmax needs the throughput metric".into()));
    }
    let mut single = spec.clone();
    single.schemes = vec![target.scheme];
    single.evaluators.truncate(1);
    if target.scheme == AccessScheme::Oma {
        if let Some(b) = target.beta.or_else(|| spec.oma_betas.first().copied()) {
            single.oma_betas = vec![b];
        }
    } else {
        single.oma_betas.clear();
    }
    if let Some(m) = target.m_max.or_else(|| spec.m_values.first().copied()) {
        single.m_values = vec![m];
    }
    let integer = spec.axis.is_integer();
    let grid = spec.range.values(integer)?;
    let throughput_at = |x: f64| -> Option<f64> {
        let mut probe = single.clone();
        probe.range = AxisRange::single(x);
        let records = run_sweep(&probe).ok()?;
        records
            .iter()
            .find(|r| r.user == target.user)
            .filter(|r| r.is_feasible())
            .map(|r| r.throughput)
    };
    let bounds = (grid[0], *grid.last().expect("validated range is non-empty"));
    refined_argmax(&grid, spec.range.spacing(), integer, bounds, throughput_at).ok_or_else(|| {
        Error::NoFeasiblePoint(format!(
            "{} user {} along {}",
            target.scheme,
            target.user.number(),
            spec.axis
        ))
    })
}
