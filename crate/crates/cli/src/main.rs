mod commands;
mod config;
mod fail;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

/// Statistical depth for temporal point processes.
#[derive(Debug, Parser)]
#[command(name = "ppdepth", version, about, propagate_version = true)]
pub struct Cli {
    /// Flat `key = value` config file; flags win over its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for default-named outputs [env: PPDEPTH_OUT_DIR, default: .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker thread cap. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate homogeneous or inhomogeneous Poisson processes.
    Simulate(SimulateArgs),
    /// Evaluate smoothed curves on a grid (CSV: t,value,id).
    Smooth(SmoothArgs),
    /// Pairwise distance matrix between two datasets.
    Distance(DistanceArgs),
    /// Depth of query processes against a reference sample.
    Depth(DepthCmdArgs),
    /// Depth and rank of every sample member.
    Rank(RankArgs),
    /// Estimate the depth center (empirical Karcher mean).
    Center(CenterCmdArgs),
    /// Depth-based classification with stratified cross-validation.
    Classify(ClassifyArgs),
    /// Simulate, estimate the center and rank, writing figure-ready files.
    Experiment(ExperimentArgs),
    /// Kernel properness checks and metric-axiom spot checks.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Kernel family (gaussian).
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset file (.jsonl or text).
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// File format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Horizon, for text files without a `# T = …` header.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    Hpp,
    Ipp,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Rate of the homogeneous process.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Intensity as weighted normal densities `w:mu:sigma[,…]`.
    #[arg(long)]
    pub mixture: Option<String>,
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; defaults to samples.jsonl in the output directory.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Number of grid points on [0, T].
    #[arg(long, default_value_t = 513)]
    pub points: usize,
    /// CSV output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Row dataset.
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// Column dataset; the row dataset when omitted.
    #[arg(long, value_name = "FILE")]
    pub b: Option<PathBuf>,
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Norm order p >= 1.
    #[arg(long)]
    pub p: Option<f64>,
    /// closed_form or quadrature; closed form when available.
    #[arg(long)]
    pub method: Option<String>,
    /// Simpson intervals for quadrature (even).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DepthArgs {
    /// h_depth, modified_h_depth or modified_band_depth.
    #[arg(long)]
    pub method: Option<String>,
    /// Bandwidth: the value itself with `--h-rule fixed` (the default when
    /// --h is given), or the constant C in h = C·T with `--h-rule proportional`.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub h_rule: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Center for the modified method: JSON from `center`, or the first
    /// process of a dataset file.
    #[arg(long, value_name = "FILE")]
    pub center_file: Option<PathBuf>,
    /// Leave each observation out of its own reference sample.
    #[arg(long)]
    pub leave_one_out: bool,
    /// Grid points for band depth.
    #[arg(long)]
    pub band_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DepthCmdArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Processes to evaluate; the sample itself when omitted.
    #[arg(long, value_name = "FILE")]
    pub query: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub depth: DepthArgs,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub depth: DepthArgs,
    /// Only the k deepest rows.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Only the k shallowest rows (combined with --top-k when both given).
    #[arg(long)]
    pub bottom_k: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CenterArgs {
    /// Annealing iterations.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Cooling constant c in T_i = c / ln(1 + i).
    #[arg(long)]
    pub anneal_c: Option<f64>,
    /// Move proposal standard deviation.
    #[arg(long)]
    pub move_sd: Option<f64>,
    /// Dimensions carried from annealing into line search.
    #[arg(long)]
    pub dr: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Convergence threshold on epoch improvement.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Plain minibatch gradient steps without Gauss–Newton scaling.
    #[arg(long)]
    pub no_precondition: bool,
}

#[derive(Debug, Args)]
pub struct CenterCmdArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// rjmcmc, line or combined.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub center: CenterArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON; defaults to center.json in the output directory.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Run all three estimators and print a summary table.
    #[arg(long)]
    pub report: bool,
    /// Extra candidate rows for the report, e.g. "20 40 60 80" (repeatable).
    #[arg(long, value_name = "EVENTS")]
    pub compare: Vec<String>,
    /// Exit with code 3 when line search does not converge.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Depth method.
    #[arg(long)]
    pub method: Option<String>,
    /// Time windows with their own kernels, e.g. "0:5:c2=100,5:10:c2=50".
    #[arg(long)]
    pub segment: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub h_rule: Option<String>,
    #[arg(long)]
    pub center_method: Option<String>,
    #[command(flatten)]
    pub center: CenterArgs,
    /// Permute labels first (chance-level baseline).
    #[arg(long)]
    pub shuffle_labels: bool,
    /// Output JSON; defaults to classification.json in the output directory.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub model: Model,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mixture: Option<String>,
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub h_rule: Option<String>,
    #[arg(long)]
    pub center_method: Option<String>,
    #[command(flatten)]
    pub center: CenterArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// Grid points per curve in the curves CSV.
    #[arg(long, default_value_t = 201)]
    pub curve_points: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long = "T", value_name = "T", default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 5)]
    pub shifts: usize,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Random triples for the metric-axiom spot check.
    #[arg(long, default_value_t = 200)]
    pub triples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("PPDEPTH_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { fail::EXIT_USAGE } else { 0 });
        }
    };
    init_logging(&cli);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(fail::exit_code(&e))
        }
    }
}
