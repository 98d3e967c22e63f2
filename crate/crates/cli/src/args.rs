use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "seqmem", version, about = "Memory cost of binary outcome sequences: deterministic complexity, classical bounds, optimized classical and quantum automata")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Base seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for restarts and survey cells.
    #[arg(long, global = true, env = "SEQMEM_JOBS")]
    pub jobs: Option<usize>,

    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the output document here instead of stdout. For `survey` this
    /// is the JSON-lines record store.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// TOML or JSON file with optimizer settings (field names as in the
    /// printed `config`); command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Deterministic complexity and all minimal patterns of a sequence.
    Dc(SeqArg),
    /// Minimal patterns with their renderings and optional expansions.
    Patterns(PatternsArgs),
    /// Number of minimal patterns of length `len` over `k` symbols.
    CountPatterns(CountArgs),
    /// Optimal equal multicyclic model for the one-tick sequence.
    Emcm(EmcmArgs),
    /// Build a closed-form model, or evaluate a model file on a sequence.
    BuildModel(BuildArgs),
    /// Multi-restart Adam search over d-state classical models.
    OptimizeClassical(OptimizeArgs),
    /// Multi-restart Adam search over d-dimensional quantum instruments.
    OptimizeQuantum(OptimizeArgs),
    /// Exhaustive search over multicyclic signatures for one-tick sequences.
    GmcmSurvey(GmcmArgs),
    /// Optimize every canonical sequence of the given lengths below its DC.
    Survey(SurveyArgs),
    /// Check survey records against the conjectured bounds.
    VerifyConjecture(VerifyArgs),
    /// Scan the Fourier one-way quantum model over the rotation angle.
    QuantumOtScan(ScanArgs),
    /// Smallest dimension reaching probability q.
    PcQ(PcArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SeqArg {
    /// Sequence of 0/1 characters.
    #[arg(value_name = "SEQ", required_unless_present = "seq_flag")]
    pub seq: Option<String>,
    #[arg(long = "seq", conflicts_with = "seq")]
    #[serde(skip)]
    pub seq_flag: Option<String>,
}

impl SeqArg {
    pub fn value(&self) -> &str {
        self.seq.as_deref().or(self.seq_flag.as_deref()).unwrap_or_default()
    }
}

#[derive(Args, Debug, Serialize)]
pub struct PatternsArgs {
    #[command(flatten)]
    pub seq: SeqArg,
    /// Also expand each pattern to this length.
    #[arg(long)]
    pub len: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    /// Alphabet size.
    #[arg(long, default_value_t = 2)]
    pub k: u64,
    #[arg(long)]
    pub len: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct EmcmArgs {
    #[arg(long = "L")]
    pub len: usize,
    #[arg(long)]
    pub d: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Emcm,
    Gmcm,
    Fourier,
    Eval,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    /// One-tick length (emcm; defaults to d + 1 for fourier).
    #[arg(long = "L")]
    pub len: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Explicit EMCM parameters; all four replace the optimum search.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
    /// Cycle probability (emcm, fourier) or comma-separated list (gmcm).
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    /// GMCM block sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Vec<usize>,
    /// GMCM start state.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Rotation angle for the Fourier model.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Model JSON to evaluate (eval), bare or under a "model" key.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Sequence to evaluate; defaults to the one-tick sequence for the
    /// closed-form families.
    #[arg(long)]
    pub seq: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct AdamFlags {
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Convergence tolerance of the windowed stopping rule.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub seq: String,
    #[arg(long)]
    pub d: usize,
    /// Kraus operators per outcome (quantum only).
    #[arg(long, default_value_t = 1)]
    pub nk: usize,
    #[command(flatten)]
    pub adam: AdamFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct GmcmArgs {
    #[arg(long = "L")]
    pub len: usize,
    /// Single dimension; every d < L when absent.
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    pub adam: AdamFlags,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindChoice {
    Classical,
    Quantum,
}

#[derive(Args, Debug, Serialize)]
pub struct SurveyArgs {
    /// Length or inclusive range such as `2..7`.
    #[arg(long = "L")]
    pub lens: Option<String>,
    /// Newline-delimited sequences to survey instead of enumerating lengths.
    #[arg(long)]
    pub seq_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindChoice::Classical)]
    pub kind: KindChoice,
    /// Dimension rule: `all`, `dc-minus:K`, or `fixed:D`.
    #[arg(long, default_value = "all")]
    pub d_rule: String,
    /// Shorthand for `--d-rule fixed:D`.
    #[arg(long, conflicts_with = "d_rule")]
    pub d: Option<usize>,
    /// Kraus counts for quantum surveys, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub nk: Vec<usize>,
    /// Also write the CSV summary here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write the sorted plot data here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Store per-cell wall time (breaks byte-identical reruns).
    #[arg(long)]
    pub wall_time: bool,
    /// Tolerance for the bound check printed with the summary.
    #[arg(long, default_value_t = 1e-6)]
    pub verify_tol: f64,
    #[command(flatten)]
    pub adam: AdamFlags,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// JSON-lines record file.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub d: usize,
    /// Grid size over (0, 2 pi]; defaults to max(10 d, 16 d^2).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Evaluate a single angle instead of scanning.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Survival probability for `--theta`; defaults to 1/(d+1).
    #[arg(long)]
    pub q: Option<f64>,
    /// Write the sampled curve as CSV (theta, probability).
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PcArgs {
    #[arg(long)]
    pub seq: String,
    /// Probability threshold in (0, 1].
    #[arg(long)]
    pub q: f64,
    #[command(flatten)]
    pub adam: AdamFlags,
}
