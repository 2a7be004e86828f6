//! Canonical sweeps behind each reproduced figure and their qualitative
//! checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::awgn::{AccessScheme, User};
use crate::error::{Error, Result};
use crate::flags::Flags;
use crate::montecarlo::Channel;
use crate::report::{curves, format_float, Curve};
use crate::sweep::{Axis, AxisRange, Metric, ResultRecord, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// AWGN throughput against payload.
    Fig2,
    /// AWGN throughput against blocklength.
    Fig3,
    /// AWGN throughput against transmit power, two OMA splits.
    Fig4,
    /// Rayleigh throughput against payload.
    Fig5,
    /// Rayleigh throughput against blocklength.
    Fig6,
    /// Rayleigh throughput against transmit power, two OMA splits.
    Fig6p,
    /// ARQ throughput against blocklength, two and three transmissions.
    Fig7,
    /// ARQ residual outage against blocklength.
    Fig8,
    /// ARQ latency against blocklength.
    Fig9,
}

impl FigureId {
    pub const ALL: [FigureId; 9] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig6p,
        FigureId::Fig7,
        FigureId::Fig8,
        FigureId::Fig9,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig6p => "fig6p",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            FigureId::Fig2 => "Throughput vs information bits k, AWGN, n=500, P1=P2=10 dB",
            FigureId::Fig3 => "Throughput vs channel uses n, AWGN, k=500 bits, P1=P2=10 dB",
            FigureId::Fig4 => "Throughput vs transmit power, AWGN, k=n=500, OMA beta 80% and 50%",
            FigureId::Fig5 => "Throughput vs information bits k, Rayleigh, n=500, P1=P2=10 dB",
            FigureId::Fig6 => "Throughput vs channel uses n, Rayleigh, k=500, P1=P2=10 dB",
            FigureId::Fig6p => "Throughput vs transmit power, Rayleigh, k=n=500, OMA beta 80% and 50%",
            FigureId::Fig7 => "ARQ throughput vs blocklength n, M=2,3, P1=P2=10 dB, k=500, D=0",
            FigureId::Fig8 => "ARQ outage vs blocklength n, M=2,3, P1=P2=10 dB, k=500",
            FigureId::Fig9 => "ARQ latency vs blocklength n, M=2,3, P1=P2=10 dB, k=500, D=0",
        }
    }

    pub fn channel(self) -> Channel {
        match self {
            FigureId::Fig2 | FigureId::Fig3 | FigureId::Fig4 => Channel::Awgn,
            _ => Channel::Rayleigh,
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            FigureId::Fig2 | FigureId::Fig5 => Axis::K,
            FigureId::Fig4 | FigureId::Fig6p => Axis::PowerDb,
            _ => Axis::N,
        }
    }

    pub fn y_metric(self) -> Metric {
        match self {
            FigureId::Fig8 => Metric::Epsilon,
            FigureId::Fig9 => Metric::Latency,
            _ => Metric::Throughput,
        }
    }

    pub fn expected_curves(self) -> usize {
        match self {
            FigureId::Fig4 | FigureId::Fig6p => 6,
            FigureId::Fig7 | FigureId::Fig8 | FigureId::Fig9 => 8,
            _ => 4,
        }
    }

    pub fn is_arq(self) -> bool {
        matches!(self, FigureId::Fig7 | FigureId::Fig8 | FigureId::Fig9)
    }

    /// The sweep that produces this figure.
    pub fn spec(self) -> SweepSpec {
        let range = match self.axis() {
            Axis::PowerDb => AxisRange::stepped(0.0, 30.0, 0.5),
            _ => AxisRange::stepped(100.0, 2000.0, 25.0),
        };
        let mut spec = SweepSpec::new(self.channel(), self.axis(), range);
        spec.metrics = vec![self.y_metric()];
        if spec.metrics[0] != Metric::Throughput {
            spec.metrics.push(Metric::Throughput);
        }
        spec.oma_betas = vec![0.8];
        if matches!(self, FigureId::Fig4 | FigureId::Fig6p) {
            spec.oma_betas.push(0.5);
        }
        if self.is_arq() {
            spec.m_values = vec![2, 3];
        }
        spec
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = FigureId::ALL.iter().map(|f| f.as_str()).collect();
                Error::Parse(format!("unknown figure `{s}` (known: {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

/// Points where the normal approximation is trusted and the outage is
/// strictly between zero and one, so ARQ orderings can be strict.
pub fn in_valid_regime(r: &ResultRecord) -> bool {
    !r.flags.intersects(Flags::SHORT_BLOCK | Flags::INFEASIBLE) && r.epsilon > 0.0 && r.epsilon < 1.0
}

fn describe(violations: &[String], total: usize) -> String {
    if violations.is_empty() {
        format!("holds at all {total} points")
    } else {
        let shown: Vec<_> = violations.iter().take(4).cloned().collect();
        let more = if violations.len() > 4 { ", ..." } else { "" };
        format!("{} of {total} points violate: {}{more}", violations.len(), shown.join("; "))
    }
}

/// NOMA throughput at least OMA throughput, per user and OMA split.
pub fn noma_dominance(records: &[ResultRecord], axis: Axis) -> Vec<Check> {
    let cs = curves(records, axis);
    let mut checks = Vec::new();
    for user in User::BOTH {
        let Some(noma) = cs.iter().find(|c| c.scheme == AccessScheme::Noma && c.user == user) else {
            continue;
        };
        for oma in cs.iter().filter(|c| c.scheme == AccessScheme::Oma && c.user == user) {
            let mut violations = Vec::new();
            let mut total = 0;
            for ((x, n), (_, o)) in noma.points.iter().zip(&oma.points) {
                total += 1;
                if n.throughput < o.throughput {
                    violations.push(format!(
                        "{axis}={} NOMA {:.4} < OMA {:.4}",
                        format_float(*x),
                        n.throughput,
                        o.throughput
                    ));
                }
            }
            checks.push(Check::new(
                format!("NOMA >= OMA throughput, {} vs {}", noma.label, oma.label),
                violations.is_empty(),
                describe(&violations, total),
            ));
        }
    }
    checks
}

/// Non-decreasing in power, with the last `window_db` adding less than
/// `tolerance`.
pub fn saturation(records: &[ResultRecord], window_db: f64, tolerance: f64) -> Vec<Check> {
    curves(records, Axis::PowerDb)
        .iter()
        .map(|c| {
            let ys = c.ys(Metric::Throughput);
            let xs = c.xs();
            let last_x = *xs.last().unwrap_or(&0.0);
            let dips = ys.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
            let start = xs
                .iter()
                .position(|x| *x >= last_x - window_db - 1e-9)
                .unwrap_or(0);
            let increment = ys.last().copied().unwrap_or(0.0) - ys[start];
            Check::new(
                format!("saturation, {}", c.label),
                dips == 0 && increment < tolerance,
                format!(
                    "increment over last {window_db} dB = {increment:.3e} (limit {tolerance:e}), {dips} decreasing steps"
                ),
            )
        })
        .collect()
}

/// Strict ordering of `metric` between the M=3 and M=2 curves at valid points.
fn arq_ordering(records: &[ResultRecord], metric: Metric, want_m3_below: bool) -> Vec<Check> {
    let cs = curves(records, Axis::N);
    let mut checks = Vec::new();
    let pairs: Vec<(&Curve, &Curve)> = cs
        .iter()
        .filter(|c| c.m_max == 2)
        .filter_map(|two| {
            cs.iter()
                .find(|c| c.m_max == 3 && c.scheme == two.scheme && c.user == two.user && c.beta == two.beta)
                .map(|three| (two, three))
        })
        .collect();
    for (two, three) in pairs {
        let mut violations = Vec::new();
        let mut total = 0;
        let mut skipped = 0;
        for ((x, a), (_, b)) in two.points.iter().zip(&three.points) {
            if !(in_valid_regime(a) && in_valid_regime(b)) {
                skipped += 1;
                continue;
            }
            total += 1;
            let (y2, y3) = (metric.of(a), metric.of(b));
            let ok = if want_m3_below { y3 < y2 } else { y3 > y2 };
            if !ok {
                violations.push(format!("n={} M=2 {y2:.6e}, M=3 {y3:.6e}", format_float(*x)));
            }
        }
        let relation = if want_m3_below { "<" } else { ">" };
        let name = two.label.replace(", M=2", "");
        checks.push(Check::new(
            format!("{} M=3 {relation} M=2, {name}", metric.as_str()),
            violations.is_empty() && total > 0,
            format!("{} ({skipped} points outside the valid regime skipped)", describe(&violations, total)),
        ));
    }
    checks
}

/// Best grid point of every curve; informational.
pub fn optima(records: &[ResultRecord], axis: Axis, metric: Metric) -> Vec<(String, f64, f64)> {
    curves(records, axis)
        .iter()
        .filter_map(|c| {
            let mut best: Option<(f64, f64)> = None;
            for (x, r) in &c.points {
                if !r.is_feasible() {
                    continue;
                }
                let y = metric.of(r);
                if !matches!(best, Some((_, by)) if y <= by) {
                    best = Some((*x, y));
                }
            }
            best.map(|(x, y)| (c.label.clone(), x, y))
        })
        .collect()
}

/// The qualitative claims attached to `figure`.
pub fn qualitative_checks(figure: FigureId, records: &[ResultRecord]) -> Vec<Check> {
    let mut checks = Vec::new();
    match figure {
        FigureId::Fig7 => checks.extend(arq_ordering(records, Metric::Throughput, true)),
        FigureId::Fig8 => checks.extend(arq_ordering(records, Metric::Epsilon, true)),
        FigureId::Fig9 => checks.extend(arq_ordering(records, Metric::Latency, false)),
        _ => checks.extend(noma_dominance(records, figure.axis())),
    }
    if figure == FigureId::Fig4 {
        checks.extend(saturation(records, 5.0, 1e-3));
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::run_sweep;

    #[test]
    fn ids_round_trip() {
        for f in FigureId::ALL {
            assert_eq!(f.as_str().parse::<FigureId>().unwrap(), f);
            assert!(f.spec().validate().is_ok());
        }
        assert!("fig1".parse::<FigureId>().is_err());
    }

    #[test]
    fn curve_counts_match_figures() {
        for f in FigureId::ALL {
            let mut spec = f.spec();
            spec.range = match f.axis() {
                Axis::PowerDb => AxisRange::stepped(0.0, 2.0, 1.0),
                _ => AxisRange::stepped(400.0, 600.0, 100.0),
            };
            let records = run_sweep(&spec).unwrap();
            assert_eq!(curves(&records, f.axis()).len(), f.expected_curves(), "{f}");
        }
    }

    #[test]
    fn arq_checks_pass_on_a_small_grid() {
        let mut spec = FigureId::Fig7.spec();
        spec.range = AxisRange::stepped(500.0, 1500.0, 250.0);
        let records = run_sweep(&spec).unwrap();
        for f in [FigureId::Fig7, FigureId::Fig8, FigureId::Fig9] {
            let checks = qualitative_checks(f, &records);
            assert_eq!(checks.len(), 4, "{f}");
            assert!(checks.iter().all(|c| c.passed), "{f}: {checks:?}");
        }
    }
}
