use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Flat-lattice transformer tagger for Chinese named entities.
#[derive(Debug, Parser)]
#[command(name = "flat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write its best checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a tagged corpus.
    Eval(EvalArgs),
    /// Tag raw sentences, one per line.
    Predict(PredictArgs),
    /// Measure inference throughput.
    Bench(BenchArgs),
    /// Print the flat lattice of sentences.
    Lattice(LatticeArgs),
}

#[derive(Debug, Args)]
struct SettingsArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a setting; repeatable. Wins over the config file and the
    /// environment.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Tagged training corpus.
    #[arg(long)]
    train: PathBuf,
    /// Tagged dev corpus used for model selection.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Lexicon, one word per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// word2vec text file of character vectors.
    #[arg(long)]
    char_emb: Option<PathBuf>,
    /// word2vec text file of word vectors.
    #[arg(long)]
    word_emb: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Write one JSON record per epoch here.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint written by `flat train`
    #[arg(long)]
    model: PathBuf,
    /// Tagged corpus to score.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Print the scores as one JSON object.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Checkpoint written by `flat train`
    #[arg(long)]
    model: PathBuf,
    /// Sentences, one per line; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Checkpoint written by `flat train`
    #[arg(long)]
    model: PathBuf,
    /// Sentences, one per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 16])]
    batch_sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Untimed passes per batch size.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Worker threads; all available cores when absent.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct LatticeArgs {
    /// Lexicon, one word per line.
    #[arg(long)]
    lexicon: PathBuf,
    /// Sentences, one per line; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sentence to process instead of reading input.
    sentence: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Predict(a) => commands::predict(a),
        Command::Bench(a) => commands::bench(a),
        Command::Lattice(a) => commands::lattice(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
