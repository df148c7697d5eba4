//! `antithetic`: score, split, augment, synthesize, train and evaluate.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when a command fails
//! at run time.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use antithetic_core::dataset::Enhancer;
use antithetic_core::trainer::LossMode;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "antithetic", version, about = "Cross-resolution re-identification pipeline")]
pub struct Cli {
    /// Worker threads for image loading and scoring [env: ANTITHETIC_THREADS, default 1].
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add a frequency-domain sharpness score to every record of a manifest.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label scored records HR (above the mean score) or LR.
    Split {
        /// Scored manifest produced by `score`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the antithetical counterpart of every partitioned record.
    Augment(AugmentArgs),
    /// Render a procedural multi-camera identity corpus.
    Synth(SynthArgs),
    /// Train the embedding network.
    Train(TrainArgs),
    /// Rank a query set against a gallery and write a JSON report.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        gallery: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Length of the CMC curve.
        #[arg(long, default_value_t = 20)]
        max_rank: usize,
    },
    /// Tally which resolution bins batch-hard mining picks from.
    AnalyzeTriplets(AnalyzeArgs),
    /// Check every analytic gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enhance one image with the built-in unsharp mask (usable as an external
    /// enhancer program).
    Enhance { input: PathBuf, output: PathBuf },
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Partitioned manifest produced by `split`.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// `classical` or `external:<program>`; the program is run as `program <in> <out>`.
    #[arg(long, default_value = "classical", value_parser = parse_enhancer)]
    pub enhancer: Enhancer,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub identities: usize,
    #[arg(long)]
    pub per_id: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long, default_value_t = 0.5)]
    pub blur_fraction: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write query.jsonl (the first N images of every identity) and gallery.jsonl (the rest).
    #[arg(long)]
    pub query_per_id: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Antithetical manifest merged into the training pool.
    #[arg(long)]
    pub antithetical: Option<PathBuf>,
    #[arg(long, default_value = "softmax", value_parser = parse_loss)]
    pub loss: LossMode,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.3)]
    pub margin: f64,
    #[arg(long, default_value_t = 60)]
    pub epochs: usize,
    #[arg(long, default_value_t = 60)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    /// First epoch of the exponential learning-rate decay.
    #[arg(long, default_value_t = 20)]
    pub decay_start: usize,
    #[arg(long, default_value_t = 0.1)]
    pub decay_base: f64,
    /// Identity-balanced batches as `P,K`.
    #[arg(long, value_parser = parse_pk)]
    pub pk: Option<(usize, usize)>,
    /// Hidden layer widths; the last is the embedding size.
    #[arg(long, value_delimiter = ',', default_value = "256,128")]
    pub hidden: Vec<usize>,
    /// Network input size as `HxW`.
    #[arg(long, default_value = "32x16", value_parser = parse_dims)]
    pub input: (usize, usize),
    #[arg(long)]
    pub no_hflip: bool,
    #[arg(long)]
    pub no_erase: bool,
    #[arg(long)]
    pub seed: u64,
    /// Checkpoint destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss history as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Partitioned manifest whose records are mined.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Selection histogram CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub p: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Number of PK batches to mine.
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    /// Also write the distance-by-resolution table as CSV.
    #[arg(long)]
    pub distances_out: Option<PathBuf>,
}

fn parse_enhancer(s: &str) -> Result<Enhancer, String> {
    match s.split_once(':') {
        None if s == "classical" => Ok(Enhancer::Classical),
        Some(("external", prog)) if !prog.is_empty() => Ok(Enhancer::External(prog.into())),
        _ => Err(format!("expected `classical` or `external:<program>`, got `{s}`")),
    }
}

fn parse_loss(s: &str) -> Result<LossMode, String> {
    s.parse().map_err(|e: antithetic_core::Error| e.to_string())
}

fn parse_pair(s: &str, sep: char) -> Result<(usize, usize), String> {
    let (a, b) =
        s.split_once(sep).ok_or_else(|| format!("expected two integers separated by `{sep}`, got `{s}`"))?;
    let int = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((int(a)?, int(b)?))
}

fn parse_pk(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s, ',')
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s, 'x')
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            // help and version go to stdout and count as success
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
