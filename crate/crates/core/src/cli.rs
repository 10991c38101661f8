//! Command-line front end: argument parsing into a validated
//! [`ExperimentConfig`], dispatch to the library, and JSON or CSV reports.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::fields::FieldError;
use crate::groups::{
    AffineElement, CosetLabeling, GroupError, LabelingKind, MeasuredGroup, Word,
    DEFAULT_NODE_BUDGET,
};
use crate::harmonic::{
    c_drift_check, conditional_small_c_check, estimate_f, extend_harmonic, growth_along_x,
    harmonicity_residual, orbit_independence, seminorm_profile, small_c_decay, ConstantOracle,
    EstimateCache, ExtensionOracle, FHatOracle, FSettings, FunctionOracle, HarmonicError,
    RhoOracle,
};
use crate::hitting::{
    hitting_measure_exact, hitting_measure_mc, hitting_time_stats, HittingError,
    DEFAULT_STATE_BUDGET, DEFAULT_SUPPORT_LIMIT,
};
use crate::line::{
    verify_big_jump, verify_exit_time, verify_green_function, verify_msep, verify_occupation_time,
    LemmaId, LineError, LineLemmaConfig, StepDistribution, DEFAULT_SEED,
};
use crate::walk::{
    censor_check, martingale_check, run_ensemble, Statistic, WalkConfig, WalkError, CENSOR_LIMIT,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_STAT_FAIL: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_MALFORMED_WORD: i32 = 4;
pub const EXIT_INVALID_GROUP: i32 = 5;
pub const EXIT_NOT_PRIME: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, or `--help` / `--version` (which exit 0).
    #[error("{0}")]
    Clap(#[from] clap::Error),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("--point: {0}")]
    Word(GroupError),
    #[error("--group: {0}")]
    Group(GroupError),
    #[error("--group: {0} is not prime")]
    NotPrime(u64),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Line(#[from] LineError),
    #[error(transparent)]
    Hitting(#[from] HittingError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("encoding report: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => EXIT_PASS,
            CliError::Clap(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Word(_) => EXIT_MALFORMED_WORD,
            CliError::Group(_) => EXIT_INVALID_GROUP,
            CliError::NotPrime(_) => EXIT_NOT_PRIME,
            _ => EXIT_ERROR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Function tested by `residual`, `seminorm` and `extend`: `f-hat` (the
/// estimated `f_r`), `rho`, or `constant:V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionSpec {
    FHat,
    Rho,
    Constant(BigRational),
}

impl FromStr for FunctionSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "f-hat" => Ok(FunctionSpec::FHat),
            "rho" => Ok(FunctionSpec::Rho),
            other => other
                .strip_prefix("constant:")
                .and_then(|v| v.parse::<BigRational>().ok())
                .map(FunctionSpec::Constant)
                .ok_or_else(|| format!("expected f-hat, rho or constant:V, got {s:?}")),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::FHat => write!(f, "f-hat"),
            FunctionSpec::Rho => write!(f, "rho"),
            FunctionSpec::Constant(v) => write!(f, "constant:{v}"),
        }
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "harmonic-walks",
    version,
    about = "Random-walk experiments on affine groups over valued fields"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
    /// Report format; JSON is complete, CSV flattens it to path,value rows.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1, global = true)]
    workers: usize,
}

#[derive(Debug, Args)]
struct GroupArgs {
    /// `bs12`, `zline`, or `lamplighter:P` with P prime.
    #[arg(long, default_value = "bs12")]
    group: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FArgs {
    /// Exit radius of the rho-walk.
    #[arg(long, default_value_t = 64.0)]
    r: f64,
    /// Count exits with `|c| < threshold`.
    #[arg(long, default_value_t = 3)]
    threshold: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Stopped walks from a point: exit time, exit side, censoring and the
    /// martingale property of rho.
    Walk {
        #[command(flatten)]
        group: GroupArgs,
        /// Start point as a word (`a^-5 b`), `(c; lambda)`, or `id`.
        #[arg(long, default_value = "id")]
        point: String,
        #[arg(long, default_value_t = 16.0)]
        r: f64,
        /// Step cap; defaults to 200 r^2.
        #[arg(long)]
        max_steps: Option<u64>,
        /// Time of the martingale check.
        #[arg(long, default_value_t = 10)]
        t: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Estimate `f_r(x) = r Pr_x[|c(X_sigma_r)| < threshold]`.
    FEstimate {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value = "id")]
        point: String,
        #[command(flatten)]
        f: FArgs,
    },
    /// Harmonicity residual `f(x) - sum_s mu(s) f(xs)`.
    Residual {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value = "id")]
        point: String,
        /// `f-hat`, `rho` or `constant:V`.
        #[arg(long, default_value = "f-hat")]
        function: FunctionSpec,
        #[command(flatten)]
        f: FArgs,
    },
    /// `max_{|x| <= R} |f(x)| / R^k` over a list of radii.
    Seminorm {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value = "f-hat")]
        function: FunctionSpec,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
        radii: Vec<u32>,
        /// Pass when max ratio / min ratio is at most this.
        #[arg(long, default_value_t = 3.0)]
        band: f64,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 64.0)]
        r: f64,
        #[arg(long, default_value_t = 3)]
        threshold: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Checks for walks on the line with i.i.d. integer steps.
    Lemma {
        #[command(subcommand)]
        lemma: LemmaCommand,
    },
    /// First-return distribution to a finite-index subgroup.
    Hitting {
        #[command(subcommand)]
        mode: HittingCommand,
    },
    /// Independence of conjugated copies of `f_r` along an orbit.
    Orbit {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 3)]
        nmax: usize,
        #[arg(long, default_value_t = 12)]
        jmax: usize,
        #[command(flatten)]
        f: FArgs,
    },
    /// Extend a function on a subgroup `H` by `x -> E_x[f(X_tau_H)]`.
    Extend {
        #[command(flatten)]
        group: GroupArgs,
        /// `trivial`, `parity` or `lambda-mod:M`.
        #[arg(long, default_value = "lambda-mod:2")]
        labeling: String,
        #[arg(long, default_value = "a")]
        point: String,
        #[arg(long, default_value = "rho")]
        function: FunctionSpec,
        /// Return walks per extension value.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Samples per `f-hat` value on `H`.
        #[arg(long, default_value_t = 10_000)]
        inner_samples: u64,
        #[arg(long, default_value_t = 64.0)]
        r: f64,
        #[arg(long, default_value_t = 3)]
        threshold: u64,
    },
    /// `f_r(x^-n)` for `n = 1..=nmax`: increasing and close to linear.
    Growth {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 8)]
        nmax: u32,
        #[arg(long, default_value_t = 128.0)]
        r: f64,
        #[arg(long, default_value_t = 3)]
        threshold: u64,
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
    },
    /// `1/r` decay of exit probabilities.
    Decay {
        #[command(subcommand)]
        kind: DecayCommand,
    },
}

#[derive(Debug, Args)]
struct LineArgs {
    /// `unit`, `uniform-K` or `sym-geometric:Q`.
    #[arg(long, default_value = "unit")]
    dist: String,
    #[arg(long, default_value_t = 16.0)]
    r: f64,
    /// Start point.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    y: f64,
    /// Occupation window `[0, m]`.
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    /// Separated-set threshold.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Separated-set size.
    #[arg(long, default_value_t = 2)]
    n: u64,
    /// Occupation level `v` in `Pr[V_m > v m^2]`.
    #[arg(long, default_value_t = 2.0)]
    v: f64,
    /// Jump size.
    #[arg(long, default_value_t = 4.0)]
    z: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sweep of r; each lemma has its own default.
    #[arg(long, value_delimiter = ',')]
    r_values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    m_values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    z_values: Vec<f64>,
}

#[derive(Debug, Subcommand)]
enum LemmaCommand {
    /// `E[sigma_r] / r^2` and the exit-time tail.
    Exit(LineArgs),
    /// Probability of a jump larger than `z` before exit.
    Jump(LineArgs),
    /// Probability of exiting on the right.
    Green(LineArgs),
    /// Time spent in `[0, m]` before exit.
    Occupation(LineArgs),
    /// Probability of visiting `n` separated points below `-q`.
    Msep(LineArgs),
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[command(flatten)]
    group: GroupArgs,
    /// `trivial`, `parity` or `lambda-mod:M`.
    #[arg(long, default_value = "lambda-mod:2")]
    labeling: String,
}

#[derive(Debug, Subcommand)]
enum HittingCommand {
    /// Exact rational `mu_H` and `E[tau_H]` by a sparse linear solve.
    Exact {
        #[command(flatten)]
        args: LabelArgs,
        /// Largest number of transient states.
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: usize,
    },
    /// Empirical `mu_H` with a word-length tail check.
    Mc {
        #[command(flatten)]
        args: LabelArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SUPPORT_LIMIT)]
        support_limit: usize,
    },
    /// `E[tau_H]` against the index and the tail of `tau_H`.
    Stats {
        #[command(flatten)]
        args: LabelArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

#[derive(Debug, Args)]
struct DecayArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, default_value = "id")]
    point: String,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    r_values: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Debug, Subcommand)]
enum DecayCommand {
    /// `Pr[exit right with |c| drifting by more than --gap]`.
    Drift {
        #[command(flatten)]
        args: DecayArgs,
        #[arg(long, default_value_t = 2)]
        gap: u64,
    },
    /// `Pr[|c(X_sigma_r)| < threshold]`.
    SmallC {
        #[command(flatten)]
        args: DecayArgs,
        #[arg(long, default_value_t = 3)]
        threshold: u64,
    },
    /// Small-c probability binned by the separated count of low heights.
    Conditional {
        #[command(flatten)]
        args: DecayArgs,
        /// Height threshold; defaults to just above the smallest valid one.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 3)]
        threshold: u64,
    },
}

/// A group and a point, validated and kept in the form they were given.
#[derive(Debug, Clone, Serialize)]
pub struct Target {
    pub group: String,
    pub point: String,
    /// The point as `(c; lambda)`.
    pub element: AffineElement,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Walk {
        target: Target,
        r: f64,
        max_steps: u64,
        t: u64,
        n_samples: u64,
        seed: u64,
    },
    FEstimate {
        target: Target,
        settings: FSettings,
    },
    Residual {
        target: Target,
        function: FunctionSpec,
        settings: FSettings,
    },
    Seminorm {
        group: String,
        function: FunctionSpec,
        k: u32,
        radii: Vec<u32>,
        band: f64,
        budget: usize,
        settings: FSettings,
    },
    Lemma {
        lemma: LemmaId,
        config: LineLemmaConfig,
    },
    HittingExact {
        group: String,
        labeling: String,
        budget: usize,
    },
    HittingMc {
        group: String,
        labeling: String,
        n_samples: u64,
        seed: u64,
        support_limit: usize,
    },
    HittingStats {
        group: String,
        labeling: String,
        n_samples: u64,
        seed: u64,
    },
    Orbit {
        group: String,
        n_max: usize,
        j_max: usize,
        settings: FSettings,
    },
    Extend {
        target: Target,
        labeling: String,
        function: FunctionSpec,
        n_samples: u64,
        settings: FSettings,
    },
    Growth {
        group: String,
        n_max: u32,
        settings: FSettings,
    },
    DecayDrift {
        target: Target,
        r_values: Vec<f64>,
        gap: u64,
        n_samples: u64,
        seed: u64,
    },
    DecaySmallC {
        target: Target,
        r_values: Vec<f64>,
        settings: FSettings,
    },
    DecayConditional {
        target: Target,
        q: Option<f64>,
        settings: FSettings,
    },
}

/// Everything needed to rerun an experiment. The worker count is kept out
/// of reports since results do not depend on it.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub command: Command,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub workers: usize,
}

/// The resolved config, the verdict and the raw result.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub pass: bool,
    pub result: Value,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_STAT_FAIL
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            Format::Csv => {
                let mut rows = Vec::new();
                flatten("", &serde_json::to_value(self)?, &mut rows);
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["path", "value"])?;
                for (k, v) in rows {
                    w.write_record([k, v])?;
                }
                Ok(
                    String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
                        .expect("utf-8 csv"),
                )
            }
        }
    }

    /// Writes the report to `--out`, or to stdout.
    pub fn write(&self) -> Result<(), CliError> {
        let body = self.render(self.config.format)?;
        match &self.config.out {
            Some(path) => std::fs::write(path, body)?,
            None => std::io::stdout().lock().write_all(body.as_bytes())?,
        }
        Ok(())
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn resolve_group(spec: &str) -> Result<Arc<MeasuredGroup>, CliError> {
    MeasuredGroup::builtin(spec)
        .map(Arc::new)
        .map_err(|e| match e {
            GroupError::Field(FieldError::NotPrime(p)) => CliError::NotPrime(p),
            e => CliError::Group(e),
        })
}

fn resolve_point(g: &MeasuredGroup, point: &str) -> Result<AffineElement, CliError> {
    let p = point.trim();
    if p == "id" || p.is_empty() {
        return Ok(g.identity());
    }
    if p.starts_with('(') {
        return AffineElement::parse(p, g.place()).map_err(CliError::Word);
    }
    let w: Word = p.parse().map_err(CliError::Word)?;
    w.evaluate(g).map_err(CliError::Word)
}

fn target(group: &str, point: &str) -> Result<Target, CliError> {
    let g = resolve_group(group)?;
    let element = resolve_point(&g, point)?;
    Ok(Target {
        group: group.to_string(),
        point: point.to_string(),
        element,
    })
}

fn resolve_labeling(g: &MeasuredGroup, spec: &str) -> Result<CosetLabeling, CliError> {
    let kind: LabelingKind = spec
        .parse()
        .map_err(|e: GroupError| CliError::Usage(format!("--labeling: {e}")))?;
    CosetLabeling::new(g, kind).map_err(|e| CliError::Usage(format!("--labeling: {e}")))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn at_least_one(name: &str, v: u64) -> Result<u64, CliError> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be at least 1")))
    }
}

fn settings(
    r: f64,
    threshold: u64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<FSettings, CliError> {
    Ok(
        FSettings::new(positive("r", r)?, at_least_one("samples", n)?, seed)
            .with_threshold(at_least_one("threshold", threshold)?)
            .with_workers(workers),
    )
}

fn line_config(a: LineArgs, workers: usize) -> Result<LineLemmaConfig, CliError> {
    let dist: StepDistribution = a
        .dist
        .parse()
        .map_err(|e: LineError| CliError::Usage(format!("--dist: {e}")))?;
    let mut cfg = LineLemmaConfig::new(dist);
    cfg.r = positive("r", a.r)?;
    cfg.y = a.y;
    cfg.m = a.m;
    cfg.q = a.q;
    cfg.n = a.n;
    cfg.v = a.v;
    cfg.z = a.z;
    cfg.n_samples = at_least_one("samples", a.samples)?;
    cfg.seed = a.seed;
    cfg.workers = workers;
    cfg.r_values = a.r_values;
    cfg.m_values = a.m_values;
    cfg.z_values = a.z_values;
    Ok(cfg)
}

/// Parses and validates `argv` (including the program name).
pub fn parse_cli<I, T>(argv: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let w = cli.workers;
    let command = match cli.command {
        CliCommand::Walk {
            group,
            point,
            r,
            max_steps,
            t,
            samples,
        } => {
            let r = positive("r", r)?;
            Command::Walk {
                target: target(&group.group, &point)?,
                r,
                max_steps: at_least_one(
                    "max-steps",
                    max_steps.unwrap_or_else(|| crate::walk::default_max_steps(r)),
                )?,
                t,
                n_samples: at_least_one("samples", samples)?,
                seed: group.seed,
            }
        }
        CliCommand::FEstimate { group, point, f } => Command::FEstimate {
            target: target(&group.group, &point)?,
            settings: settings(f.r, f.threshold, f.samples, group.seed, w)?,
        },
        CliCommand::Residual {
            group,
            point,
            function,
            f,
        } => Command::Residual {
            target: target(&group.group, &point)?,
            function,
            settings: settings(f.r, f.threshold, f.samples, group.seed, w)?,
        },
        CliCommand::Seminorm {
            group,
            function,
            k,
            radii,
            band,
            budget,
            r,
            threshold,
            samples,
        } => {
            resolve_group(&group.group)?;
            if radii.is_empty() {
                return Err(CliError::Usage("--radii needs at least one radius".into()));
            }
            Command::Seminorm {
                group: group.group,
                function,
                k,
                radii,
                band: positive("band", band)?,
                budget,
                settings: settings(r, threshold, samples, group.seed, w)?,
            }
        }
        CliCommand::Lemma { lemma } => {
            let (lemma, args) = match lemma {
                LemmaCommand::Exit(a) => (LemmaId::ExitTime, a),
                LemmaCommand::Jump(a) => (LemmaId::BigJump, a),
                LemmaCommand::Green(a) => (LemmaId::GreenFunction, a),
                LemmaCommand::Occupation(a) => (LemmaId::OccupationTime, a),
                LemmaCommand::Msep(a) => (LemmaId::Msep, a),
            };
            Command::Lemma {
                lemma,
                config: line_config(args, w)?,
            }
        }
        CliCommand::Hitting { mode } => {
            let args = match &mode {
                HittingCommand::Exact { args, .. }
                | HittingCommand::Mc { args, .. }
                | HittingCommand::Stats { args, .. } => args,
            };
            let g = resolve_group(&args.group.group)?;
            resolve_labeling(&g, &args.labeling)?;
            match mode {
                HittingCommand::Exact { args, budget } => Command::HittingExact {
                    group: args.group.group,
                    labeling: args.labeling,
                    budget,
                },
                HittingCommand::Mc {
                    args,
                    samples,
                    support_limit,
                } => Command::HittingMc {
                    group: args.group.group,
                    labeling: args.labeling,
                    n_samples: at_least_one("samples", samples)?,
                    seed: args.group.seed,
                    support_limit,
                },
                HittingCommand::Stats { args, samples } => Command::HittingStats {
                    group: args.group.group,
                    labeling: args.labeling,
                    n_samples: at_least_one("samples", samples)?,
                    seed: args.group.seed,
                },
            }
        }
        CliCommand::Orbit {
            group,
            nmax,
            jmax,
            f,
        } => {
            resolve_group(&group.group)?;
            Command::Orbit {
                group: group.group,
                n_max: nmax,
                j_max: jmax,
                settings: settings(f.r, f.threshold, f.samples, group.seed, w)?,
            }
        }
        CliCommand::Extend {
            group,
            labeling,
            point,
            function,
            samples,
            inner_samples,
            r,
            threshold,
        } => {
            let t = target(&group.group, &point)?;
            let g = resolve_group(&group.group)?;
            resolve_labeling(&g, &labeling)?;
            Command::Extend {
                target: t,
                labeling,
                function,
                n_samples: at_least_one("samples", samples)?,
                settings: settings(r, threshold, inner_samples, group.seed, w)?,
            }
        }
        CliCommand::Growth {
            group,
            nmax,
            r,
            threshold,
            samples,
        } => {
            resolve_group(&group.group)?;
            Command::Growth {
                group: group.group,
                n_max: nmax,
                settings: settings(r, threshold, samples, group.seed, w)?,
            }
        }
        CliCommand::Decay { kind } => {
            let (args, extra) = match kind {
                DecayCommand::Drift { args, gap } => (args, DecayExtra::Gap(gap)),
                DecayCommand::SmallC { args, threshold } => (args, DecayExtra::SmallC(threshold)),
                DecayCommand::Conditional { args, q, threshold } => {
                    (args, DecayExtra::Conditional(q, threshold))
                }
            };
            let t = target(&args.group.group, &args.point)?;
            for &r in &args.r_values {
                positive("r-values", r)?;
            }
            let n = at_least_one("samples", args.samples)?;
            let seed = args.group.seed;
            let r_max = args.r_values.iter().copied().fold(f64::NAN, f64::max);
            match extra {
                DecayExtra::Gap(gap) => Command::DecayDrift {
                    target: t,
                    r_values: args.r_values,
                    gap,
                    n_samples: n,
                    seed,
                },
                DecayExtra::SmallC(threshold) => Command::DecaySmallC {
                    target: t,
                    settings: settings(r_max, threshold, n, seed, w)?,
                    r_values: args.r_values,
                },
                DecayExtra::Conditional(q, threshold) => Command::DecayConditional {
                    target: t,
                    q,
                    settings: settings(r_max, threshold, n, seed, w)?,
                },
            }
        }
    };
    Ok(ExperimentConfig {
        command,
        format: cli.format,
        out: cli.out,
        workers: w,
    })
}

enum DecayExtra {
    Gap(u64),
    SmallC(u64),
    Conditional(Option<f64>, u64),
}

fn oracle(spec: &FunctionSpec, g: &Arc<MeasuredGroup>, s: &FSettings) -> Box<dyn FunctionOracle> {
    match spec {
        FunctionSpec::FHat => Box::new(FHatOracle::new(g.clone(), s.clone())),
        FunctionSpec::Rho => Box::new(RhoOracle),
        FunctionSpec::Constant(v) => Box::new(ConstantOracle(v.clone())),
    }
}

#[derive(Serialize)]
struct WalkResult {
    stop_time: crate::walk::EstimateReport,
    exit_high: crate::walk::EstimateReport,
    censor: crate::walk::CensorCheck,
    martingale: crate::walk::MartingaleCheck,
}

#[derive(Serialize)]
struct ExactHittingResult {
    measure: crate::hitting::HittingMeasure,
    expected_tau: String,
    expected_tau_value: f64,
}

#[derive(Serialize)]
struct ExtendResult {
    estimate: crate::harmonic::ExtensionEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<crate::harmonic::ResidualReport>,
}

fn json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

/// Runs the experiment. Statistical failures are reported with
/// `pass = false`; anything else that goes wrong is an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let w = cfg.workers;
    let (pass, result) = match &cfg.command {
        Command::Walk {
            target,
            r,
            max_steps,
            t,
            n_samples,
            seed,
        } => {
            let g = resolve_group(&target.group)?;
            let x = target.element.clone();
            let walk =
                WalkConfig::sigma_r(g.clone(), x.clone(), *r, *seed).with_max_steps(*max_steps);
            let stop_time = run_ensemble(&walk, *n_samples, &Statistic::stop_time(), w)?;
            let exit_high = run_ensemble(&walk, *n_samples, &Statistic::exit_high(), w)?;
            let censor = censor_check(g.clone(), x.clone(), *r, *n_samples, *seed, w)?;
            let martingale = martingale_check(&g, &x, *t, *n_samples, *seed, w)?;
            let pass =
                stop_time.censored_fraction() < CENSOR_LIMIT && censor.pass && martingale.pass;
            (
                pass,
                json(&WalkResult {
                    stop_time,
                    exit_high,
                    censor,
                    martingale,
                })?,
            )
        }
        Command::FEstimate { target, settings } => {
            let g = resolve_group(&target.group)?;
            (true, json(&estimate_f(&g, &target.element, settings)?)?)
        }
        Command::Residual {
            target,
            function,
            settings,
        } => {
            let g = resolve_group(&target.group)?;
            let o = oracle(function, &g, settings);
            let rep = harmonicity_residual(&g, o.as_ref(), &target.element)?;
            (rep.pass, json(&rep)?)
        }
        Command::Seminorm {
            group,
            function,
            k,
            radii,
            band,
            budget,
            settings,
        } => {
            let g = resolve_group(group)?;
            let o = oracle(function, &g, settings);
            let rep = seminorm_profile(&g, o.as_ref(), *k, radii, *budget)?;
            (rep.within_band(*band), json(&rep)?)
        }
        Command::Lemma { lemma, config } => {
            let v = match lemma {
                LemmaId::ExitTime => verify_exit_time(config)?,
                LemmaId::BigJump => verify_big_jump(config)?,
                LemmaId::GreenFunction => verify_green_function(config)?,
                LemmaId::OccupationTime => verify_occupation_time(config)?,
                LemmaId::Msep => verify_msep(config)?,
            };
            (v.pass, json(&v)?)
        }
        Command::HittingExact {
            group,
            labeling,
            budget,
        } => {
            let g = resolve_group(group)?;
            let lab = resolve_labeling(&g, labeling)?;
            let (measure, tau) = hitting_measure_exact(&g, &lab, *budget)?;
            let expected_tau_value = tau.to_f64().unwrap_or(f64::NAN);
            (
                true,
                json(&ExactHittingResult {
                    measure,
                    expected_tau: tau.to_string(),
                    expected_tau_value,
                })?,
            )
        }
        Command::HittingMc {
            group,
            labeling,
            n_samples,
            seed,
            support_limit,
        } => {
            let g = resolve_group(group)?;
            let lab = resolve_labeling(&g, labeling)?;
            let rep = hitting_measure_mc(&g, &lab, *n_samples, *seed, w, *support_limit)?;
            (rep.all_in_subgroup && rep.smooth, json(&rep)?)
        }
        Command::HittingStats {
            group,
            labeling,
            n_samples,
            seed,
        } => {
            let g = resolve_group(group)?;
            let lab = resolve_labeling(&g, labeling)?;
            let rep = hitting_time_stats(&g, &lab, *n_samples, *seed, w)?;
            (rep.pass, json(&rep)?)
        }
        Command::Orbit {
            group,
            n_max,
            j_max,
            settings,
        } => {
            let g = resolve_group(group)?;
            let rep = orbit_independence(&g, *n_max, *j_max, settings, &EstimateCache::default())?;
            (rep.pass, json(&rep)?)
        }
        Command::Extend {
            target,
            labeling,
            function,
            n_samples,
            settings,
        } => {
            let g = resolve_group(&target.group)?;
            let lab = resolve_labeling(&g, labeling)?;
            let inner = oracle(function, &g, settings);
            let x = &target.element;
            let estimate =
                extend_harmonic(&g, &lab, inner.as_ref(), x, *n_samples, settings.seed, w)?;
            let residual = if estimate.in_subgroup {
                None
            } else {
                let ext = ExtensionOracle {
                    group: g.clone(),
                    labeling: lab,
                    inner,
                    n_samples: *n_samples,
                    seed: settings.seed,
                    workers: w,
                };
                Some(harmonicity_residual(&g, &ext, x)?)
            };
            let pass = residual.as_ref().is_none_or(|r| r.pass);
            (pass, json(&ExtendResult { estimate, residual })?)
        }
        Command::Growth {
            group,
            n_max,
            settings,
        } => {
            let g = resolve_group(group)?;
            let rep = growth_along_x(&g, *n_max, settings, &EstimateCache::default())?;
            (rep.pass, json(&rep)?)
        }
        Command::DecayDrift {
            target,
            r_values,
            gap,
            n_samples,
            seed,
        } => {
            let g = resolve_group(&target.group)?;
            let rep = c_drift_check(
                &g,
                &target.element,
                r_values,
                Some(*gap),
                *n_samples,
                *seed,
                w,
            )?;
            (rep.pass, json(&rep)?)
        }
        Command::DecaySmallC {
            target,
            r_values,
            settings,
        } => {
            let g = resolve_group(&target.group)?;
            let rep = small_c_decay(
                &g,
                &target.element,
                r_values,
                settings,
                &EstimateCache::default(),
            )?;
            (rep.pass, json(&rep)?)
        }
        Command::DecayConditional {
            target,
            q,
            settings,
        } => {
            let g = resolve_group(&target.group)?;
            let rep = conditional_small_c_check(&g, &target.element, *q, settings)?;
            (rep.pass, json(&rep)?)
        }
    };
    Ok(Report {
        config: cfg.clone(),
        pass,
        result,
    })
}

/// `main` for the binary: parse, run, write, and return the exit code.
pub fn run_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = parse_cli(argv).and_then(|cfg| {
        let report = run_experiment(&cfg)?;
        report.write()?;
        Ok(report.exit_code())
    });
    match outcome {
        Ok(code) => code,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<ExperimentConfig, CliError> {
        parse_cli(std::iter::once("harmonic-walks").chain(args.split_whitespace()))
    }

    #[test]
    fn f_estimate_defaults_the_threshold() {
        let cfg =
            parse("f-estimate --group bs12 --point a^-5 --r 64 --samples 100000 --seed 7").unwrap();
        match cfg.command {
            Command::FEstimate { target, settings } => {
                assert_eq!(settings.threshold, 3);
                assert_eq!(
                    (settings.r, settings.n_samples, settings.seed),
                    (64.0, 100_000, 7)
                );
                assert_eq!(target.element.to_string(), "(0; 1/32)");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn lemma_green_maps_to_a_line_config() {
        let cfg = parse("lemma green --dist unit --r 32 --y 4 --samples 200000 --seed 1").unwrap();
        match cfg.command {
            Command::Lemma {
                lemma: LemmaId::GreenFunction,
                config,
            } => {
                assert_eq!(config.distribution, StepDistribution::Unit);
                assert_eq!(
                    (config.r, config.y, config.n_samples, config.seed),
                    (32.0, 4.0, 200_000, 1)
                );
            }
            other => panic!("{other:?}"),
        }
        let cfg = parse("lemma msep --y -2 --r-values 16,32").unwrap();
        match cfg.command {
            Command::Lemma { config, .. } => {
                assert_eq!((config.y, config.r_values), (-2.0, vec![16.0, 32.0]))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn each_failure_has_its_own_exit_code() {
        let code = |a: &str| parse(a).unwrap_err().exit_code();
        assert_eq!(code("f-estimate --group lamplighter:4"), EXIT_NOT_PRIME);
        assert_eq!(code("f-estimate --group nope"), EXIT_INVALID_GROUP);
        assert_eq!(code("f-estimate --group lamplighter:x"), EXIT_INVALID_GROUP);
        assert_eq!(code("f-estimate --point a^x"), EXIT_MALFORMED_WORD);
        assert_eq!(code("f-estimate --point q"), EXIT_MALFORMED_WORD);
        assert_eq!(code("f-estimate --unknown 1"), EXIT_USAGE);
        assert_eq!(code("f-estimate --r -1"), EXIT_USAGE);
        assert_eq!(code("hitting exact --labeling lambda-mod:0"), EXIT_USAGE);
        assert_eq!(code("--help"), EXIT_PASS);
        assert!(parse("f-estimate --group lamplighter:5 --point t^2").is_ok());
        assert!(parse("walk --point (1/2;2)").is_ok());
    }

    #[test]
    fn help_lists_every_subcommand() {
        let help = match parse("--help") {
            Err(CliError::Clap(e)) => e.to_string(),
            other => panic!("{other:?}"),
        };
        for sub in [
            "walk",
            "f-estimate",
            "residual",
            "seminorm",
            "lemma",
            "hitting",
            "orbit",
            "extend",
        ] {
            assert!(help.contains(sub), "{sub}");
        }
        let lemma = match parse("lemma --help") {
            Err(CliError::Clap(e)) => e.to_string(),
            other => panic!("{other:?}"),
        };
        for sub in ["exit", "jump", "green", "occupation", "msep"] {
            assert!(lemma.contains(sub), "{sub}");
        }
    }

    #[test]
    fn reports_embed_the_config_but_not_the_workers() {
        let one =
            run_experiment(&parse("hitting stats --group bs12 --samples 3000").unwrap()).unwrap();
        let three = run_experiment(
            &parse("hitting stats --group bs12 --samples 3000 --workers 3").unwrap(),
        )
        .unwrap();
        let (a, b) = (
            one.render(Format::Json).unwrap(),
            three.render(Format::Json).unwrap(),
        );
        assert_eq!(a, b);
        assert!(a.contains("\"n_samples\": 3000") && !a.contains("worker"));
        assert_eq!(one.exit_code(), EXIT_PASS);
    }

    #[test]
    fn csv_is_a_flat_projection() {
        let rep = run_experiment(
            &parse("hitting exact --group zline --labeling parity --format csv").unwrap(),
        )
        .unwrap();
        let csv = rep.render(Format::Csv).unwrap();
        assert!(csv.starts_with("path,value\n"));
        assert!(csv.contains("result.measure.support.0.p,1/2\n"));
        assert!(csv.contains("result.expected_tau,2\n"));
        assert!(csv.contains("config.command,hitting-exact\n"));
    }

    #[test]
    fn failed_checks_exit_with_two() {
        // uniform(2) overshoot spreads E[sigma_r]/r^2 at small r
        let rep =
            run_experiment(&parse("lemma exit --dist uniform-2 --samples 20000").unwrap()).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.exit_code(), EXIT_STAT_FAIL);
    }
}
