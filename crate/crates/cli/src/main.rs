use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use synthpipe::lang::Lang;

mod commands;

/// Synthetic-corpus toolkit: generation via completion endpoints and the
/// multilingual quality-filtering stack.
#[derive(Parser)]
#[command(name = "synthpipe", version, about)]
struct Cli {
    /// Pipeline config (TOML); required by `filter`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Restrict processing to one language tag (bn gu hi kn ml mr or pa ta te en).
    #[arg(long, global = true)]
    lang: Option<Lang>,

    /// Worker threads for `filter` (overrides the config value).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// RNG seed for training and generation commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Stop evaluating a document after its first failing filter stage.
    #[arg(long, global = true)]
    fail_fast: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a JSONL corpus; writes kept/discarded/verdicts plus a report.
    Filter(FilterArgs),
    /// Train a Kneser-Ney n-gram language model.
    TrainLm(TrainLmArgs),
    /// Calibrate a per-language perplexity cutoff on a validation set.
    Calibrate(CalibrateArgs),
    /// Train the language-identification classifier.
    TrainLangid(TrainLangidArgs),
    /// Train the binary quality classifier.
    TrainClassifier(TrainClassifierArgs),
    /// Train word embeddings for the bias audit.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Run the word-embedding association test over curated word sets.
    Weat(WeatArgs),
    /// Counter-stereotypical augmentation of a corpus.
    Mitigate(MitigateArgs),
    /// Render a prompt template with bindings (preview).
    Render(RenderArgs),
    /// Generate documents through a completion endpoint.
    Generate(GenerateArgs),
    /// Aggregate a verdicts JSONL file into a discard report.
    Report(ReportArgs),
}

#[derive(Args)]
struct FilterArgs {
    /// Input corpus (JSONL with id/text/language).
    #[arg(long)]
    input: PathBuf,
    /// Output directory for kept.jsonl, discarded.jsonl, verdicts.jsonl, report.tsv.
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct TrainLmArgs {
    /// Training corpus.
    #[arg(long)]
    input: PathBuf,
    /// Input format: jsonl (one document per line) or text (one sentence per line).
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// N-gram order.
    #[arg(long, default_value_t = 5)]
    order: usize,
    /// Output model path (.knlm).
    #[arg(long)]
    out: PathBuf,
    /// Also export the model in ARPA text format.
    #[arg(long)]
    arpa: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Trained model (.knlm).
    #[arg(long)]
    model: PathBuf,
    /// Validation corpus (JSONL).
    #[arg(long)]
    validation: PathBuf,
    /// Percentile of the perplexity distribution to report.
    #[arg(long, default_value_t = 0.8)]
    percentile: f64,
}

#[derive(Args)]
struct TrainLangidArgs {
    /// Labeled corpus (JSONL; `language` is the label).
    #[arg(long)]
    input: PathBuf,
    /// Output model path (.lidm).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 262144)]
    buckets: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
}

#[derive(Args)]
struct TrainClassifierArgs {
    /// Labeled data (JSONL with text + label high|low).
    #[arg(long)]
    input: PathBuf,
    /// Output model path (.qclf).
    #[arg(long)]
    out: PathBuf,
    /// Held-out labeled data to evaluate after training.
    #[arg(long)]
    eval: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 2)]
    word_ngrams: usize,
    /// Disable character n-gram features.
    #[arg(long)]
    no_char_ngrams: bool,
}

#[derive(Args)]
struct TrainEmbeddingsArgs {
    /// Corpus (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// Output vectors in text format.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 2)]
    min_count: u64,
}

#[derive(Args)]
struct WeatArgs {
    /// Embedding vectors (text format).
    #[arg(long)]
    embeddings: PathBuf,
    /// JSON manifest mapping aspects to word-set files.
    #[arg(long)]
    wordsets: PathBuf,
    /// Audit only this aspect (gender caste race religion region).
    #[arg(long)]
    aspect: Option<String>,
    /// Also write the raw results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct MitigateArgs {
    /// Corpus to augment (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// JSON manifest mapping aspects to word-set files.
    #[arg(long)]
    wordsets: PathBuf,
    /// Aspect to mitigate.
    #[arg(long)]
    aspect: String,
    /// Biased instances to rewrite per target term.
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Co-occurrence window in words.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Augmented corpus output (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Edit manifest output (JSONL).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Style name (e.g. wikihow, blogpost, math_textbook).
    #[arg(long)]
    style: String,
    /// Placeholder bindings, repeatable: --bind extract="..." .
    #[arg(long = "bind", value_name = "KEY=VALUE")]
    bindings: Vec<String>,
    /// Template directory (defaults to the bundled set).
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Routing table (JSON).
    #[arg(long)]
    routes: PathBuf,
    /// Style name.
    #[arg(long)]
    style: String,
    /// Placeholder bindings, repeatable.
    #[arg(long = "bind", value_name = "KEY=VALUE")]
    bindings: Vec<String>,
    /// Number of documents to generate (seeds increment per document).
    #[arg(long, default_value_t = 1)]
    count: u32,
    /// Output JSONL (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSONL audit log of endpoint requests.
    #[arg(long)]
    audit_log: Option<PathBuf>,
    /// Template directory (defaults to the bundled set).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Endpoint timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    #[arg(long, default_value_t = 0.8)]
    temperature: f64,
    #[arg(long, default_value_t = 4096)]
    max_tokens: u32,
}

#[derive(Args)]
struct ReportArgs {
    /// Verdicts JSONL produced by `filter`.
    #[arg(long)]
    verdicts: PathBuf,
    /// Also write the report as TSV.
    #[arg(long)]
    tsv: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
