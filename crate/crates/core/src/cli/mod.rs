//! Command-line front end.
//!
//! Exit status: 0 success (including runs that only carry warnings),
//! 1 I/O failure or a failed `verify`, 2 invalid configuration or arguments,
//! 3 infeasible dependence request, 4 numerical-accuracy failure.

pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::batch::{Generator, SampleBatch, Warning};
use crate::betagen::{BetaTrivariateSampler, CEstimate};
use crate::bounds::{corr_range, CorrRange};
use crate::error::Error;
use crate::marginals::{Family, Marginal};
use crate::multigen::{
    feasibility_check, EquicorrelatedSampler, FactorVector, FeasibilityReport, MultivariateSampler,
};
use crate::pairgen::{ErlangPairSampler, PairSampler};
use crate::stats::{ks_test, pearson_corr, Alpha, GofReport};

pub use config::{parse_config, ConfigError, CorrSpec, Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mincorr",
    version,
    about = "Correlated samples with exact marginals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the attainable correlation range of a marginal paired with itself.
    Bounds(BoundsArgs),
    /// Generate a batch and write it with a run manifest.
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Data file; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Manifest file; defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run the feasibility gates and print a JSON report.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate, then test margins (KS) and pairwise correlations.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Number of draws; defaults to `n` from the config.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Regenerate the batch described by a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub nu1: Option<u32>,
    #[arg(long)]
    pub nu2: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl BoundsArgs {
    fn marginal(&self) -> Result<Marginal, CliError> {
        let mut m = Map::new();
        m.insert("family".into(), json!(self.family));
        let floats = [
            ("lambda", self.lambda),
            ("k", self.k),
            ("a", self.a),
            ("mu", self.mu),
            ("sigma", self.sigma),
        ];
        for (key, v) in floats {
            if let Some(v) = v {
                m.insert(key.into(), json!(v));
            }
        }
        for (key, v) in [("n", self.n), ("nu1", self.nu1), ("nu2", self.nu2)] {
            if let Some(v) = v {
                m.insert(key.into(), json!(v));
            }
        }
        config::parse_marginal(&Value::Object(m)).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_feasibility_stop() {
            EXIT_INFEASIBLE
        } else if matches!(e, Error::NumericalAccuracy { .. }) {
            EXIT_NUMERICAL
        } else {
            EXIT_CONFIG
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::config(e.to_string())
    }
}

/// The generator chosen for a configuration.
#[derive(Debug, Clone)]
pub enum Plan {
    Pair(PairSampler),
    ErlangPair(ErlangPairSampler),
    Equicorrelated(EquicorrelatedSampler),
    Multivariate(MultivariateSampler),
    BetaTrivariate(BetaTrivariateSampler),
}

/// Everything resolved from a configuration before generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub generator: String,
    pub marginal: Marginal,
    pub range: Option<CorrRange>,
    pub factors: Option<FactorVector>,
    pub accept_probs: Vec<f64>,
    pub c_estimate: Option<CEstimate>,
    pub target_correlation: Vec<Vec<f64>>,
}

impl Plan {
    pub fn build(cfg: &RunConfig) -> crate::error::Result<Self> {
        let f = cfg.marginal;
        Ok(match &cfg.corr {
            CorrSpec::Pair(rho) => match f.family() {
                // Sums of exponential pairs reach lower than the quantile coupling
                // admits for equal shapes; see `corr_range`.
                Family::Erlang { n, lambda } => {
                    Plan::ErlangPair(ErlangPairSampler::new(n, lambda, *rho)?)
                }
                _ => Plan::Pair(PairSampler::new(f, f, *rho)?),
            },
            CorrSpec::Equicorrelated { dim, rho } => {
                Plan::Equicorrelated(EquicorrelatedSampler::new(f, *rho, *dim)?)
            }
            CorrSpec::Matrix(m) => match f.family() {
                Family::BetaInt { nu1, nu2 } if m.dim() == 3 => {
                    Plan::BetaTrivariate(BetaTrivariateSampler::new(nu1, nu2, m)?)
                }
                _ => Plan::Multivariate(MultivariateSampler::from_matrix(f, m)?),
            },
        })
    }

    pub fn generator(&self) -> &dyn Generator {
        match self {
            Plan::Pair(s) => s,
            Plan::ErlangPair(s) => s,
            Plan::Equicorrelated(s) => s,
            Plan::Multivariate(s) => s,
            Plan::BetaTrivariate(s) => s,
        }
    }

    pub fn resolution(&self, cfg: &RunConfig) -> Resolution {
        let target_correlation = match &cfg.corr {
            CorrSpec::Pair(r) => vec![vec![1.0, *r], vec![*r, 1.0]],
            CorrSpec::Equicorrelated { dim, rho } => (0..*dim)
                .map(|i| {
                    (0..*dim)
                        .map(|j| if i == j { 1.0 } else { rho * rho })
                        .collect()
                })
                .collect(),
            CorrSpec::Matrix(m) => m.rows(),
        };
        let base = Resolution {
            generator: String::new(),
            marginal: cfg.marginal,
            range: None,
            factors: None,
            accept_probs: Vec::new(),
            c_estimate: None,
            target_correlation,
        };
        match self {
            Plan::Pair(s) => Resolution {
                generator: "pair".into(),
                range: Some(*s.range()),
                accept_probs: vec![s.accept_prob()],
                ..base
            },
            Plan::ErlangPair(s) => Resolution {
                generator: "erlang_pair_sum".into(),
                range: Some(*s.range()),
                ..base
            },
            Plan::Equicorrelated(s) => Resolution {
                generator: "equicorrelated".into(),
                accept_probs: vec![s.rho().abs(); cfg.corr.dim()],
                ..base
            },
            Plan::Multivariate(s) => Resolution {
                generator: "factorized".into(),
                range: Some(*s.range()),
                factors: Some(s.factors().clone()),
                accept_probs: s.accept_probs().to_vec(),
                ..base
            },
            Plan::BetaTrivariate(s) => Resolution {
                generator: "beta_vector_source".into(),
                factors: Some(s.factors().clone()),
                accept_probs: s.accept_probs().to_vec(),
                c_estimate: Some(*s.c_estimate()),
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// The configuration as given; enough to regenerate the batch.
    pub config: Value,
    pub n: usize,
    pub seed: u64,
    pub dim: usize,
    pub format: Format,
    pub output: PathBuf,
    pub block_size: usize,
    pub resolution: Resolution,
    pub warnings: Vec<Warning>,
    pub wall_time_seconds: f64,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    Ok(parse_config(&read(path)?)?)
}

/// Writes the batch as CSV (`x1,...,xd` header) or JSON lines, every value
/// with 17 significant digits.
pub fn write_batch<W: Write>(batch: &SampleBatch, format: Format, mut w: W) -> io::Result<()> {
    match format {
        Format::Csv => {
            let header: Vec<String> = (1..=batch.dim).map(|i| format!("x{i}")).collect();
            writeln!(w, "{}", header.join(","))?;
            for row in batch.rows() {
                for (j, x) in row.iter().enumerate() {
                    if j > 0 {
                        w.write_all(b",")?;
                    }
                    write!(w, "{x:.16e}")?;
                }
                w.write_all(b"\n")?;
            }
        }
        Format::Jsonl => {
            for row in batch.rows() {
                w.write_all(b"{")?;
                for (j, x) in row.iter().enumerate() {
                    if j > 0 {
                        w.write_all(b",")?;
                    }
                    write!(w, "\"x{}\":{x:.16e}", j + 1)?;
                }
                w.write_all(b"}\n")?;
            }
        }
    }
    w.flush()
}

fn write_file(path: &Path, batch: &SampleBatch, format: Format) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_batch(batch, format, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn print_json(out: &mut dyn Write, v: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    writeln!(out, "{text}").map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("stdout: {e}"),
    })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn generate(cfg: &RunConfig, n: usize) -> Result<(Plan, SampleBatch), CliError> {
    let plan = Plan::build(cfg)?;
    let batch = SampleBatch::generate(plan.generator(), n, cfg.seed);
    Ok((plan, batch))
}

fn sample(
    cfg: &RunConfig,
    out: &Path,
    manifest: &Path,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let start = Instant::now();
    let (plan, batch) = generate(cfg, cfg.n)?;
    write_file(out, &batch, cfg.format)?;
    for w in &batch.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let m = RunManifest {
        version: VERSION.into(),
        config: cfg.source.clone(),
        n: cfg.n,
        seed: cfg.seed,
        dim: batch.dim,
        format: cfg.format,
        output: out.to_path_buf(),
        block_size: crate::batch::BLOCK_SIZE,
        resolution: plan.resolution(cfg),
        warnings: batch.warnings.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(manifest, &m)
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    feasible: bool,
    stop: Option<String>,
    resolution: Option<Resolution>,
    warnings: Vec<Warning>,
    matrix: Option<FeasibilityReport>,
}

fn validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let matrix = match (&cfg.corr, cfg.marginal.family()) {
        (CorrSpec::Matrix(m), Family::BetaInt { .. }) if m.dim() == 3 => None,
        (CorrSpec::Matrix(m), _) => Some(feasibility_check(&cfg.marginal, m)?),
        _ => None,
    };
    let (report, result) = match Plan::build(cfg) {
        Ok(plan) => (
            ValidateReport {
                feasible: true,
                stop: None,
                resolution: Some(plan.resolution(cfg)),
                warnings: plan.generator().warnings(),
                matrix,
            },
            Ok(()),
        ),
        Err(e) => {
            let err = CliError::from(e.clone());
            if err.code != EXIT_INFEASIBLE {
                return Err(err);
            }
            // Prefer the report's gate ordering for the headline reason.
            let stop = matrix
                .as_ref()
                .and_then(|m| m.stop.clone())
                .unwrap_or_else(|| e.to_string());
            (
                ValidateReport {
                    feasible: false,
                    stop: Some(stop),
                    resolution: None,
                    warnings: Vec::new(),
                    matrix,
                },
                Err(err),
            )
        }
    };
    print_json(out, &report)?;
    result
}

#[derive(Debug, Serialize)]
struct CorrelationCheck {
    i: usize,
    j: usize,
    target: f64,
    empirical: f64,
    tolerance: f64,
    /// Excluded from the verdict because a warning marks it inexact.
    approximate: bool,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    draws: usize,
    seed: u64,
    marginal: Marginal,
    ks: Vec<GofReport>,
    correlations: Vec<CorrelationCheck>,
    warnings: Vec<Warning>,
    pass: bool,
}

/// Allowed gap between sample and target correlation: 0.01, widened for
/// small batches to five standard errors of a correlation near zero.
pub fn correlation_tolerance(draws: usize) -> f64 {
    (5.0 / (draws as f64).sqrt()).max(0.01)
}

fn verify(cfg: &RunConfig, draws: usize, out: &mut dyn Write) -> Result<(), CliError> {
    if draws < 2 {
        return Err(CliError::config("verify needs at least 2 draws"));
    }
    let (plan, batch) = generate(cfg, draws)?;
    let target = plan.resolution(cfg).target_correlation;
    let cols: Vec<Vec<f64>> = (0..batch.dim).map(|j| batch.column(j)).collect();
    let ks: Vec<GofReport> = cols
        .iter()
        .map(|c| ks_test(c, &cfg.marginal, Alpha::P01))
        .collect();
    let flagged: Vec<usize> = batch
        .warnings
        .iter()
        .flat_map(|w| match w {
            Warning::NegativeFactors { indices } | Warning::ApproximateNegative { indices, .. } => {
                indices.clone()
            }
        })
        .collect();
    let tolerance = correlation_tolerance(draws);
    let mut correlations = Vec::new();
    for i in 0..batch.dim {
        for j in i + 1..batch.dim {
            let empirical = pearson_corr(&cols[i], &cols[j]).unwrap_or(f64::NAN);
            let approximate = flagged.contains(&i) || flagged.contains(&j);
            correlations.push(CorrelationCheck {
                i,
                j,
                target: target[i][j],
                empirical,
                tolerance,
                approximate,
                pass: (empirical - target[i][j]).abs() <= tolerance,
            });
        }
    }
    let pass = ks.iter().all(|k| k.pass) && correlations.iter().all(|c| c.pass || c.approximate);
    let report = VerifyReport {
        draws,
        seed: cfg.seed,
        marginal: cfg.marginal,
        ks,
        correlations,
        warnings: batch.warnings.clone(),
        pass,
    };
    print_json(out, &report)?;
    if pass {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_FAILURE,
            message: "verification failed".into(),
        })
    }
}

#[derive(Debug, Serialize)]
struct BoundsReport {
    marginal: Marginal,
    #[serde(flatten)]
    range: CorrRange,
}

/// Runs one command, writing reports to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Bounds(args) => {
            let marginal = args.marginal()?;
            let range = corr_range(&marginal, &marginal)?;
            print_json(out, &BoundsReport { marginal, range })
        }
        Command::Sample {
            config,
            out: data,
            manifest,
        } => {
            let cfg = load_config(&config)?;
            let data = data.or_else(|| cfg.output.clone()).ok_or_else(|| {
                CliError::config("no output path: pass --out or set `output` in the config")
            })?;
            let manifest = manifest.unwrap_or_else(|| manifest_path(&data));
            sample(&cfg, &data, &manifest, err)
        }
        Command::Validate { config } => validate(&load_config(&config)?, out),
        Command::Verify { config, draws } => {
            let cfg = load_config(&config)?;
            verify(&cfg, draws.unwrap_or(cfg.n), out)
        }
        Command::Replay {
            manifest,
            out: data,
        } => {
            let doc: Value = serde_json::from_slice(&read(&manifest)?)
                .map_err(|e| CliError::config(format!("{}: {e}", manifest.display())))?;
            let version = doc
                .get("version")
                .and_then(Value::as_str)
                .unwrap_or("unknown");
            if version != VERSION {
                let _ = writeln!(
                    err,
                    "warning: manifest written by version {version}, replaying with {VERSION}"
                );
            }
            let source = doc
                .get("config")
                .cloned()
                .ok_or_else(|| CliError::config("manifest has no `config`"))?;
            let cfg = config::parse_value(source)?;
            let (_, batch) = generate(&cfg, cfg.n)?;
            write_file(&data, &batch, cfg.format)
        }
    }
}

/// Process entry point.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    match run(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message.trim_end());
            ExitCode::from(e.code)
        }
    }
}
