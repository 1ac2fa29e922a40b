use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const SCHEMAS: &str = "\
Input schemas (UTF-8 JSON):
  matrix        row-major array of arrays, e.g. [[1,0.5],[0.5,1]]
  blocks        1-based index lists, e.g. \"[[1,2],[3,4]]\", or the words
                `singleton` / `whole`, or a path to a JSON file
  Levy measure  {\"atoms\": [{\"x\": [..], \"mass\": m}, ..]}
  triplet       {\"drift\": [..], \"sigma\": matrix, \"levy\": Levy measure}
  covfun        {\"family\": \"brownian-min\"|\"fbm\"|\"product\"|\"grid\",
                 \"params\": {\"hurst\", \"coef\", \"times\", \"gram\"}}
  distribution  {\"support\": [[..], ..], \"probs\": [..]}
  trajectories  [{\"path\": [[x_0], [x_1], ..], \"mass\": m}, ..]
  MA model      {\"innovation\": matrix, \"theta\": [matrix, ..]}
  source        preset name (brownian-antithetic), a .csv / .bin batch, or
                {\"kind\": \"gaussian\"|\"triplet\"|\"increments\"|\"discrete\"|\"ma\", ..}
  functions     {\"psi1\": smooth, \"psi2\": smooth}; smooth is tagged by
                \"form\": constant | tanh-affine | logistic-product | sum

Exit codes: 0 PASS, 1 VIOLATION, 2 INCONCLUSIVE, 3 input or usage error.
BLOCKASSOC_THREADS caps the worker threads (default: all cores).";

/// Simulation and verification of association between blocks.
#[derive(Debug, Parser)]
#[command(name = "blockassoc", version, after_long_help = SCHEMAS)]
pub struct Cli {
    /// Report format on standard output.
    #[arg(long, value_enum, global = true, default_value_t = Format::Both)]
    pub format: Format,
    /// Also write the JSON report to this file.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Table followed by the JSON report.
    Both,
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gaussian vector: associated between blocks iff cross-block covariances are non-negative.
    CheckGaussian(CheckGaussian),
    /// Sufficient conditions for an infinitely divisible vector.
    CheckId(CheckId),
    /// L-superadditivity of a covariance function on a finite time list.
    CheckCovfun(CheckCovfun),
    /// Support conditions for a Levy measure or for trajectory atoms.
    CheckSupport(CheckSupport),
    /// Exact association oracle for a small discrete law.
    Oracle(Oracle),
    /// Monte Carlo falsification test.
    McTest(McTest),
    /// Draw a sample batch.
    Simulate(Simulate),
    /// Monte Carlo check of the covariance interpolation formula.
    HpsVerify(HpsVerify),
    /// Central limit and invariance experiments for an MA model.
    Clt(Clt),
    /// Re-evaluate a recorded Monte Carlo witness.
    Replay(Replay),
}

#[derive(Debug, Args)]
pub struct CheckGaussian {
    /// Covariance matrix file.
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long, default_value = "singleton")]
    pub blocks: String,
}

#[derive(Debug, Args)]
pub struct CheckId {
    /// Triplet file.
    #[arg(long)]
    pub triplet: PathBuf,
    #[arg(long, default_value = "singleton")]
    pub blocks: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovfunMethod {
    /// Exact rectangle increments over the time list.
    Rectangles,
    /// Central finite-difference mixed derivatives.
    Derivative,
}

#[derive(Debug, Args)]
pub struct CheckCovfun {
    /// Covariance function file.
    #[arg(long)]
    pub covfun: PathBuf,
    /// Comma-separated or JSON list of increasing times.
    #[arg(long)]
    pub times: String,
    #[arg(long, value_enum, default_value_t = CovfunMethod::Rectangles)]
    pub method: CovfunMethod,
    /// Finite-difference step for `--method derivative`.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Largest admissible number of times for rectangle enumeration.
    #[arg(long, default_value_t = 25)]
    pub budget: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SupportInput {
    /// Levy measure file; checks the two equivalent support conditions.
    #[arg(long)]
    pub levy: Option<PathBuf>,
    /// Trajectory atoms file; checks the process support condition.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckSupport {
    #[command(flatten)]
    pub input: SupportInput,
    /// Partition for `--levy`.
    #[arg(long, default_value = "singleton")]
    pub blocks: String,
}

#[derive(Debug, Args)]
pub struct Oracle {
    /// Discrete distribution file.
    #[arg(long)]
    pub dist: PathBuf,
    /// Partition; without it plain association is decided.
    #[arg(long)]
    pub blocks: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub max_support: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_upper_sets: usize,
    #[arg(long, default_value_t = 5)]
    pub max_block_support: usize,
    #[arg(long, default_value_t = 3)]
    pub max_blocks: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_combinations: usize,
    #[arg(long, default_value_t = 2_000_000_000)]
    pub max_pair_evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Block,
    Weak,
    Negative,
}

#[derive(Debug, Args)]
pub struct McTest {
    /// Preset name, batch file (.csv / .bin) or source spec JSON file.
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value = "singleton")]
    pub blocks: String,
    /// Sample size; defaults to 100000, or the whole batch for file batches.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of function pairs.
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    /// Familywise significance level.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Mode::Block)]
    pub mode: Mode,
    /// Admit unbounded outer functions when second moments are finite.
    #[arg(long)]
    pub allow_unbounded: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatchFormat {
    Csv,
    Binary,
}

#[derive(Debug, Args)]
pub struct Simulate {
    /// Preset name or source spec JSON file.
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "batch-format", value_enum, default_value_t = BatchFormat::Csv)]
    pub batch_format: BatchFormat,
    /// Batch file; metadata goes to `<batch>.meta.json`.
    #[arg(long)]
    pub batch: PathBuf,
}

#[derive(Debug, Args)]
pub struct HpsVerify {
    #[arg(long)]
    pub triplet: PathBuf,
    /// File holding `{"psi1": .., "psi2": ..}`.
    #[arg(long)]
    pub functions: PathBuf,
    /// Samples for each side and per quadrature node.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct Clt {
    /// MA model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// Also run the invariance check at these times in (0, 1].
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Run even if weak association between blocks is not certified.
    #[arg(long)]
    pub override_hypothesis: bool,
    /// Partition for the certificate; defaults to one block.
    #[arg(long)]
    pub blocks: Option<String>,
}

#[derive(Debug, Args)]
pub struct Replay {
    /// mc-test report or bare witness JSON.
    #[arg(long)]
    pub witness: PathBuf,
    /// Source override; required when the witness does not record one.
    #[arg(long)]
    pub source: Option<String>,
    /// Draw a fresh batch from this seed instead of the recorded lineage.
    #[arg(long)]
    pub seed: Option<u64>,
}
