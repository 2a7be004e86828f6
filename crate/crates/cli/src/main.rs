use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use fbl_noma::arq::LatencyModel;
use fbl_noma::awgn::AccessScheme;
use fbl_noma::fading::SinrModel;
use fbl_noma::figures::FigureId;
use fbl_noma::montecarlo::{Channel, Estimator};
use fbl_noma::numerics::RateUnit;
use fbl_noma::sweep::Evaluator;

mod commands;
mod config;

use config::RunConfig;

/// How a command failed; each variant maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    /// Numerical or domain error (exit 1).
    Domain(String),
    /// Bad flags or config (exit 2).
    Usage(String),
    /// An oracle comparison or figure check failed (exit 3).
    Validation(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Validation(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Domain(m) | Failure::Usage(m) | Failure::Validation(m) => f.write_str(m),
        }
    }
}

impl From<fbl_noma::Error> for Failure {
    fn from(e: fbl_noma::Error) -> Self {
        use fbl_noma::Error as E;
        match e {
            E::InvalidSpec(_) | E::Parse(_) | E::FigureMismatch { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

fn parse<T>(s: &str) -> Result<T, String>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "fbl-noma",
    version,
    about = "Finite-blocklength OMA vs NOMA two-user uplink: outage, throughput and type-I ARQ"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate both users at one operating point and print the records as CSV.
    Eval(EvalArgs),
    /// Run the sweep described by a config file and write its CSV.
    Sweep(SweepArgs),
    /// Regenerate one figure's data and check its qualitative claims.
    Reproduce(ReproduceArgs),
    /// Compare closed forms, quadrature and Monte Carlo at one point.
    Validate(ValidateArgs),
}

/// Operating-point overrides shared by the commands that take a config.
#[derive(Debug, Default, Args)]
struct PointArgs {
    /// Payload of each user (bits over AWGN, nats under fading by default).
    #[arg(long)]
    k: Option<u32>,
    /// Channel uses per frame.
    #[arg(long)]
    n: Option<u32>,
    /// OMA share of user 1, in (0, 1).
    #[arg(long)]
    beta: Option<f64>,
    /// Transmit SNR of user 1 in dB.
    #[arg(long, allow_negative_numbers = true)]
    p1_db: Option<f64>,
    /// Transmit SNR of user 2 in dB.
    #[arg(long, allow_negative_numbers = true)]
    p2_db: Option<f64>,
    /// Maximum number of ARQ transmissions.
    #[arg(long)]
    m_max: Option<u32>,
    /// Channel uses per feedback round trip.
    #[arg(long)]
    feedback_delay: Option<u32>,
    /// ARQ channel-use accounting: paper-literal, expected-rounds or paper-simplified.
    #[arg(long, value_parser = parse::<LatencyModel>)]
    latency_model: Option<LatencyModel>,
    /// Payload unit: bits or nats.
    #[arg(long, value_parser = parse::<RateUnit>)]
    unit: Option<RateUnit>,
    /// NOMA user-2 SINR under fading: interference-limited or full-noise.
    #[arg(long, value_parser = parse::<SinrModel>)]
    sinr_model: Option<SinrModel>,
    /// Add the (log n)/(2n) term to the normal approximation.
    #[arg(long)]
    half_log: bool,
}

/// Monte Carlo overrides.
#[derive(Debug, Default, Args)]
struct SimArgs {
    /// Monte Carlo trials (episodes under ARQ).
    #[arg(long)]
    trials: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Outage estimator: smooth (conditional error) or bernoulli.
    #[arg(long, value_parser = parse::<Estimator>)]
    estimator: Option<Estimator>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Channel: awgn or rayleigh.
    #[arg(long, value_parser = parse::<Channel>, required_unless_present = "config")]
    channel: Option<Channel>,
    /// Access scheme: oma or noma.
    #[arg(long, value_parser = parse::<AccessScheme>, required_unless_present = "config")]
    scheme: Option<AccessScheme>,
    /// Evaluator: closed_form, quadrature or montecarlo.
    #[arg(long, value_parser = parse::<Evaluator>, default_value = "closed_form")]
    evaluator: Evaluator,
    /// Base config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Config file with a [sweep] section.
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "FBL_NOMA_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Replace the configured evaluators (repeatable).
    #[arg(long, value_parser = parse::<Evaluator>)]
    evaluator: Vec<Evaluator>,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Figure id: fig2, fig3, fig4, fig5, fig6, fig6p, fig7, fig8 or fig9.
    #[arg(value_parser = parse::<FigureId>)]
    figure: FigureId,
    /// Output directory.
    #[arg(long, env = "FBL_NOMA_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Replace the figure's evaluator (repeatable).
    #[arg(long, value_parser = parse::<Evaluator>)]
    evaluator: Vec<Evaluator>,
    #[command(flatten)]
    sim: SimArgs,
    /// Exit with status 3 when a qualitative check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Optional base config.
    config: Option<PathBuf>,
    /// Channel to validate: awgn or rayleigh (default rayleigh).
    #[arg(long, value_parser = parse::<Channel>)]
    channel: Option<Channel>,
    /// Largest |z| tolerated before exiting with status 3.
    #[arg(long, default_value_t = 4.0)]
    z_limit: f64,
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    sim: SimArgs,
}

impl PointArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.k {
            cfg.frame.k = v;
        }
        if let Some(v) = self.n {
            cfg.frame.n = v;
        }
        if let Some(v) = self.beta {
            cfg.frame.beta = v;
        }
        if let Some(v) = self.p1_db {
            cfg.powers.p1_db = v;
        }
        if let Some(v) = self.p2_db {
            cfg.powers.p2_db = v;
        }
        if let Some(v) = self.m_max {
            cfg.arq.m_max = v;
        }
        if let Some(v) = self.feedback_delay {
            cfg.arq.feedback_delay = v;
        }
        if let Some(v) = self.latency_model {
            cfg.arq.latency_model = v;
        }
        if self.unit.is_some() {
            cfg.scheme.unit = self.unit;
        }
        if let Some(v) = self.sinr_model {
            cfg.scheme.sinr_model = v;
        }
        if self.half_log {
            cfg.scheme.half_log_correction = true;
        }
    }
}

impl SimArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.trials {
            cfg.sim.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.sim.seed = v;
        }
        if let Some(v) = self.estimator {
            cfg.sim.estimator = v;
        }
    }
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, Failure> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Eval(a) => {
            let mut cfg = load(a.config.as_ref())?;
            a.point.apply(&mut cfg);
            a.sim.apply(&mut cfg);
            if a.channel.is_some() {
                cfg.scheme.channel = a.channel;
            }
            if let Some(s) = a.scheme {
                cfg.scheme.schemes = vec![s];
            }
            commands::eval(&cfg, a.evaluator)
        }
        Command::Sweep(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            a.point.apply(&mut cfg);
            a.sim.apply(&mut cfg);
            if !a.evaluator.is_empty() {
                cfg.sweep.get_or_insert_with(Default::default).evaluators = Some(a.evaluator);
            }
            commands::sweep(&cfg, &a.out_dir)
        }
        Command::Reproduce(a) => {
            let mut cfg = RunConfig::default();
            a.sim.apply(&mut cfg);
            commands::reproduce(a.figure, &a.evaluator, &cfg, &a.out_dir, a.strict)
        }
        Command::Validate(a) => {
            let mut cfg = load(a.config.as_ref())?;
            a.point.apply(&mut cfg);
            a.sim.apply(&mut cfg);
            if a.channel.is_some() {
                cfg.scheme.channel = a.channel;
            }
            commands::validate(&cfg, a.z_limit)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
