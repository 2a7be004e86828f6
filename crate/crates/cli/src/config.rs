//! The TOML run configuration and its resolution into library types.

use std::path::Path;

use fbl_noma::arq::{ArqPolicy, LatencyModel};
use fbl_noma::awgn::{AccessScheme, FrameConfig, LinkPowers};
use fbl_noma::fading::SinrModel;
use fbl_noma::figures::FigureId;
use fbl_noma::montecarlo::{Channel, Estimator, SimConfig};
use fbl_noma::numerics::RateUnit;
use fbl_noma::sweep::{
    Axis, AxisRange, Evaluator, Metric, MonteCarloSettings, OperatingPoint, SweepSpec,
};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub frame: FrameSection,
    pub powers: PowersSection,
    pub scheme: SchemeSection,
    pub arq: ArqSection,
    pub sim: SimSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSection {
    pub k: u32,
    pub n: u32,
    pub beta: f64,
}

impl Default for FrameSection {
    fn default() -> Self {
        FrameSection {
            k: 500,
            n: 500,
            beta: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowersSection {
    pub p1_db: f64,
    pub p2_db: f64,
}

impl Default for PowersSection {
    fn default() -> Self {
        PowersSection {
            p1_db: 10.0,
            p2_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<Channel>,
    pub schemes: Vec<AccessScheme>,
    /// Payload unit; bits over AWGN and nats under fading when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<RateUnit>,
    pub sinr_model: SinrModel,
    pub half_log_correction: bool,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            channel: None,
            schemes: vec![AccessScheme::Noma, AccessScheme::Oma],
            unit: None,
            sinr_model: SinrModel::default(),
            half_log_correction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArqSection {
    pub m_max: u32,
    pub feedback_delay: u32,
    pub latency_model: LatencyModel,
}

impl Default for ArqSection {
    fn default() -> Self {
        ArqSection {
            m_max: 1,
            feedback_delay: 0,
            latency_model: LatencyModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub trials: u64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            trials: 1_000_000,
            seed: 1,
            estimator: Estimator::Smooth,
        }
    }
}

/// Sweep description. With `figure` set, unset keys fall back to that
/// figure's canonical sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<FigureId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oma_betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<Metric>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluators: Option<Vec<Evaluator>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Failure::Usage(msg) => Failure::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The configured channel, or the sweep figure's.
    pub fn channel(&self) -> Option<Channel> {
        self.scheme
            .channel
            .or_else(|| self.sweep.as_ref()?.figure.map(FigureId::channel))
    }

    pub fn unit_for(&self, channel: Channel) -> RateUnit {
        self.scheme.unit.unwrap_or(match channel {
            Channel::Awgn => RateUnit::Bits,
            Channel::Rayleigh => RateUnit::Nats,
        })
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            k: self.frame.k,
            n: self.frame.n,
            beta: self.frame.beta,
            p1_db: self.powers.p1_db,
            p2_db: self.powers.p2_db,
            m_max: self.arq.m_max,
            feedback_delay: self.arq.feedback_delay,
            latency_model: self.arq.latency_model,
        }
    }

    pub fn montecarlo(&self) -> MonteCarloSettings {
        MonteCarloSettings {
            trials: self.sim.trials,
            seed: self.sim.seed,
            estimator: self.sim.estimator,
        }
    }

    /// Library-level checks on the operating point: payload, blocklength,
    /// split, powers and ARQ cap.
    pub fn check_point(&self) -> Result<(FrameConfig, LinkPowers, ArqPolicy), Failure> {
        let frame = FrameConfig::new(self.frame.k, self.frame.n, self.frame.beta)?;
        if self.scheme.schemes.contains(&AccessScheme::Oma) {
            frame.check_oma_split()?;
        }
        let powers = LinkPowers::from_db(self.powers.p1_db, self.powers.p2_db)?;
        let policy = ArqPolicy::new(self.arq.m_max, self.arq.feedback_delay, self.arq.latency_model)?;
        Ok((frame, powers, policy))
    }

    /// Simulation settings for one scheme at the configured point.
    pub fn sim_config(&self, scheme: AccessScheme, channel: Channel) -> Result<SimConfig, Failure> {
        let (frame, powers, policy) = self.check_point()?;
        let mut cfg = SimConfig::new(scheme, channel, frame, powers);
        cfg.trials = self.sim.trials;
        cfg.seed = self.sim.seed;
        cfg.estimator = self.sim.estimator;
        cfg.sinr_model = self.scheme.sinr_model;
        cfg.unit = self.unit_for(channel);
        cfg.half_log_correction = self.scheme.half_log_correction;
        cfg.policy = (policy.m_max > 1).then_some(policy);
        Ok(cfg)
    }

    /// Resolves the `[sweep]` section into a sweep specification.
    pub fn sweep_spec(&self) -> Result<SweepSpec, Failure> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| Failure::Usage("config has no [sweep] section".into()))?;
        let base = section.figure.map(FigureId::spec);
        let channel = self
            .channel()
            .ok_or_else(|| Failure::Usage("set `scheme.channel` or `sweep.figure`".into()))?;
        let axis = section
            .axis
            .or(base.as_ref().map(|s| s.axis))
            .ok_or_else(|| Failure::Usage("set `sweep.axis` or `sweep.figure`".into()))?;
        let base_range = base.as_ref().filter(|s| s.axis == axis).map(|s| s.range);
        let range = match (section.start, section.stop, base_range) {
            (Some(start), Some(stop), _) => AxisRange {
                start,
                stop,
                step: section.step,
                count: section.count,
            },
            (None, None, Some(mut r)) => {
                if section.step.is_some() || section.count.is_some() {
                    r.step = section.step;
                    r.count = section.count;
                }
                r
            }
            _ => return Err(Failure::Usage("set both `sweep.start` and `sweep.stop`".into())),
        };

        let mut spec = SweepSpec::new(channel, axis, range);
        if let Some(b) = &base {
            spec.oma_betas = b.oma_betas.clone();
            spec.m_values = b.m_values.clone();
            spec.metrics = b.metrics.clone();
            spec.evaluators = b.evaluators.clone();
        }
        spec.fixed = self.operating_point();
        spec.schemes = self.scheme.schemes.clone();
        spec.unit = self.unit_for(channel);
        spec.sinr_model = self.scheme.sinr_model;
        spec.half_log_correction = self.scheme.half_log_correction;
        spec.montecarlo = self.montecarlo();
        if let Some(v) = &section.oma_betas {
            spec.oma_betas = v.clone();
        }
        if let Some(v) = &section.m_values {
            spec.m_values = v.clone();
        }
        if let Some(v) = &section.metrics {
            spec.metrics = v.clone();
        }
        if let Some(v) = &section.evaluators {
            spec.evaluators = v.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_canonical_point() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.operating_point(), OperatingPoint::default());
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = RunConfig::parse("[frame]\nk = 400\nblocklength = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("blocklength"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        assert!(RunConfig::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn figure_defaults_fill_the_sweep() {
        let cfg = RunConfig::parse("[sweep]\nfigure = \"fig4\"\n").unwrap();
        let spec = cfg.sweep_spec().unwrap();
        // [sim] always applies, defaults included.
        let mut expected = FigureId::Fig4.spec();
        expected.montecarlo = cfg.montecarlo();
        assert_eq!(spec, expected);
    }

    #[test]
    fn explicit_sweep_overrides_figure() {
        let text = "[frame]\nn = 400\n[sweep]\nfigure = \"fig2\"\nstart = 100\nstop = 300\nstep = 100\n\
                    evaluators = [\"closed_form\", \"montecarlo\"]\n";
        let spec = RunConfig::parse(text).unwrap().sweep_spec().unwrap();
        assert_eq!(spec.axis, Axis::K);
        assert_eq!(spec.range.values(true).unwrap(), vec![100.0, 200.0, 300.0]);
        assert_eq!(spec.fixed.n, 400);
        assert_eq!(spec.evaluators, vec![Evaluator::ClosedForm, Evaluator::MonteCarlo]);
    }

    #[test]
    fn sweep_without_axis_is_a_usage_error() {
        let cfg = RunConfig::parse("[scheme]\nchannel = \"awgn\"\n[sweep]\nstart = 1\nstop = 2\n").unwrap();
        assert!(matches!(cfg.sweep_spec(), Err(Failure::Usage(_))));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig {
            sweep: Some(SweepSection {
                figure: Some(FigureId::Fig7),
                ..SweepSection::default()
            }),
            ..RunConfig::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}
