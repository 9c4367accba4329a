//! Entry point wiring the pipeline stages to subcommands. All argument
//! parsing and the exit-code convention live here; the stages themselves
//! are library calls.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use nextok_core::nn::{Hyperparams, Real};

use config::FileConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "nextok",
    about = "Subword code completion: corpus preparation, BPE, windowed samples, LSTM training, evaluation",
    arg_required_else_help = true
)]
struct Cli {
    /// Optional flat `key = value` config file; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize source files into a one-document-per-line corpus
    Preprocess(PreprocessArgs),
    /// Shuffle a corpus and divide it into train and eval files
    Split(SplitArgs),
    /// Learn a byte-pair-encoding vocabulary from a corpus
    TrainBpe(TrainBpeArgs),
    /// Turn corpus lines into token id lines
    Encode(EncodeArgs),
    /// Turn token id lines back into text
    Decode(DecodeArgs),
    /// Slice id lines into fixed-width training windows
    GenSamples(GenSamplesArgs),
    /// Train a model on a samples file
    Train(TrainArgs),
    /// Score a checkpoint against a samples file
    Eval(EvalArgs),
    /// Measure the unknown-token rate under vocabulary truncation
    Oov(OovArgs),
    /// Interactive completion prompt backed by a checkpoint
    Complete(CompleteArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// Directory scanned recursively for source files
    #[arg(long, value_name = "DIR")]
    input_dir: Option<PathBuf>,
    /// Corpus file to write
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// File extension to include
    #[arg(long, default_value = "py")]
    ext: String,
}

#[derive(Args)]
struct SplitArgs {
    /// Corpus file to divide
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Fraction of documents routed to the train file
    #[arg(long, default_value_t = 0.9)]
    train_frac: f64,
    /// Shuffle seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Train corpus to write
    #[arg(long, value_name = "FILE")]
    out_train: Option<PathBuf>,
    /// Eval corpus to write
    #[arg(long, value_name = "FILE")]
    out_eval: Option<PathBuf>,
}

#[derive(Args)]
struct TrainBpeArgs {
    /// Corpus file, one document per line
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Vocabulary size including the two reserved ids
    #[arg(long, default_value_t = 8192)]
    vocab_size: usize,
    /// Model file to write
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Trained model file
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Corpus file to encode
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Ids file to write, one line of space-separated ids per document
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Trained model file
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Ids file to decode
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Text file to write
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenSamplesArgs {
    /// Ids file, one encoded document per line
    #[arg(long, value_name = "FILE")]
    ids: Option<PathBuf>,
    /// Input window width
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Offset between consecutive window starts
    #[arg(long, default_value_t = 20)]
    step: usize,
    /// Samples file to write
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Which side short windows are padded on: right or left
    #[arg(long, default_value = "right")]
    pad_side: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Model flavor: attn or pointer
    #[arg(long)]
    kind: Option<String>,
    /// Samples file to train on
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
    /// Tokenizer model, fixes the vocabulary size
    #[arg(long, value_name = "FILE")]
    bpe: Option<PathBuf>,
    /// Directory for checkpoints and the metrics log
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of passes over the samples
    #[arg(long, default_value_t = 8)]
    epochs: usize,
    /// Samples per weight update
    #[arg(long, default_value_t = 128)]
    batch: usize,
    /// Learning rate
    #[arg(long, default_value_t = 0.001)]
    lr: Real,
    /// Global gradient-norm ceiling
    #[arg(long, default_value_t = 5.0)]
    clip: Real,
    /// Initialization and shuffle seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint to score
    #[arg(long, value_name = "FILE")]
    ckpt: Option<PathBuf>,
    /// Samples file to score against
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
}

#[derive(Args)]
struct OovArgs {
    /// Tokenizer model file
    #[arg(long, value_name = "FILE")]
    bpe: Option<PathBuf>,
    /// Corpus file to measure on
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Comma-separated vocabulary sizes to truncate to
    #[arg(long, default_value = "1000,4000,8192")]
    truncations: String,
}

#[derive(Args)]
struct CompleteArgs {
    /// Checkpoint backing the completions
    #[arg(long, value_name = "FILE")]
    ckpt: Option<PathBuf>,
    /// Tokenizer model file
    #[arg(long, value_name = "FILE")]
    bpe: Option<PathBuf>,
    /// How many candidates to show per prompt
    #[arg(long, default_value_t = 5)]
    topk: usize,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let mut cmd = Cli::command();
    let matches = match cmd.clone().try_get_matches() {
        Ok(m) => m,
        Err(err) => {
            let _ = err.print();
            // An unknown subcommand gets the full listing, not just the
            // one-line usage hint.
            if err.kind() == ErrorKind::InvalidSubcommand {
                eprintln!();
                eprintln!("{}", cmd.render_help());
            }
            return err.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    match dispatch(&cli, &matches) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, matches: &ArgMatches) -> Result<(), CliError> {
    let cfg = config::load(cli.config.as_deref())?;
    let (_, sub) = matches.subcommand().expect("subcommand is required");
    match &cli.command {
        Command::Preprocess(a) => run_preprocess(a, sub, &cfg),
        Command::Split(a) => run_split(a, sub, &cfg),
        Command::TrainBpe(a) => run_train_bpe(a, sub, &cfg),
        Command::Encode(a) => run_encode(a, &cfg),
        Command::Decode(a) => run_decode(a, &cfg),
        Command::GenSamples(a) => run_gen_samples(a, sub, &cfg),
        Command::Train(a) => run_train(a, sub, &cfg),
        Command::Eval(a) => run_eval(a, &cfg),
        Command::Oov(a) => run_oov(a, sub, &cfg),
        Command::Complete(a) => run_complete(a, sub, &cfg),
    }
}

fn run_preprocess(a: &PreprocessArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let input_dir = config::resolve_path(a.input_dir.clone(), "input-dir", cfg)?;
    let output = config::resolve_path(a.output.clone(), "output", cfg)?;
    let ext: String = config::resolve(m, "ext", a.ext.clone(), cfg)?;
    commands::preprocess(&input_dir, &output, &ext)
}

fn run_split(a: &SplitArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let input = config::resolve_path(a.input.clone(), "input", cfg)?;
    let train_frac = config::resolve(m, "train_frac", a.train_frac, cfg)?;
    let seed = config::resolve(m, "seed", a.seed, cfg)?;
    let out_train = config::resolve_path(a.out_train.clone(), "out-train", cfg)?;
    let out_eval = config::resolve_path(a.out_eval.clone(), "out-eval", cfg)?;
    commands::split(&input, train_frac, seed, &out_train, &out_eval)
}

fn run_train_bpe(a: &TrainBpeArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let corpus = config::resolve_path(a.corpus.clone(), "corpus", cfg)?;
    let vocab_size = config::resolve(m, "vocab_size", a.vocab_size, cfg)?;
    let output = config::resolve_path(a.output.clone(), "output", cfg)?;
    commands::train_bpe(&corpus, vocab_size, &output)
}

fn run_encode(a: &EncodeArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let model = config::resolve_path(a.model.clone(), "model", cfg)?;
    let input = config::resolve_path(a.input.clone(), "input", cfg)?;
    let output = config::resolve_path(a.output.clone(), "output", cfg)?;
    commands::encode(&model, &input, &output)
}

fn run_decode(a: &DecodeArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let model = config::resolve_path(a.model.clone(), "model", cfg)?;
    let input = config::resolve_path(a.input.clone(), "input", cfg)?;
    let output = config::resolve_path(a.output.clone(), "output", cfg)?;
    commands::decode(&model, &input, &output)
}

fn run_gen_samples(a: &GenSamplesArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let ids = config::resolve_path(a.ids.clone(), "ids", cfg)?;
    let window = config::resolve(m, "window", a.window, cfg)?;
    let step = config::resolve(m, "step", a.step, cfg)?;
    let output = config::resolve_path(a.output.clone(), "output", cfg)?;
    let pad_side: String = config::resolve(m, "pad_side", a.pad_side.clone(), cfg)?;
    commands::gen_samples(&ids, window, step, &pad_side, &output)
}

fn run_train(a: &TrainArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let kind = config::resolve_string(a.kind.clone(), "kind", cfg)?;
    let samples = config::resolve_path(a.samples.clone(), "samples", cfg)?;
    let bpe = config::resolve_path(a.bpe.clone(), "bpe", cfg)?;
    let out = config::resolve_path(a.out.clone(), "out", cfg)?;
    let hp = Hyperparams {
        epochs: config::resolve(m, "epochs", a.epochs, cfg)?,
        batch_size: config::resolve(m, "batch", a.batch, cfg)?,
        learning_rate: config::resolve(m, "lr", a.lr, cfg)?,
        clip_norm: config::resolve(m, "clip", a.clip, cfg)?,
        seed: config::resolve(m, "seed", a.seed, cfg)?,
        ..Hyperparams::default()
    };
    commands::train(&kind, &samples, &bpe, &out, &hp)
}

fn run_eval(a: &EvalArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let ckpt = config::resolve_path(a.ckpt.clone(), "ckpt", cfg)?;
    let samples = config::resolve_path(a.samples.clone(), "samples", cfg)?;
    commands::eval(&ckpt, &samples)
}

fn run_oov(a: &OovArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let bpe = config::resolve_path(a.bpe.clone(), "bpe", cfg)?;
    let corpus = config::resolve_path(a.corpus.clone(), "corpus", cfg)?;
    let truncations: String = config::resolve(m, "truncations", a.truncations.clone(), cfg)?;
    commands::oov(&bpe, &corpus, &truncations)
}

fn run_complete(a: &CompleteArgs, m: &ArgMatches, cfg: &FileConfig) -> Result<(), CliError> {
    let ckpt = config::resolve_path(a.ckpt.clone(), "ckpt", cfg)?;
    let bpe = config::resolve_path(a.bpe.clone(), "bpe", cfg)?;
    let topk = config::resolve(m, "topk", a.topk, cfg)?;
    commands::complete(&ckpt, &bpe, topk)
}
