use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecpe_cli::commands::{cmd_ingest, cmd_report, cmd_run, cmd_split, cmd_stats, SUMMARY_FILE};
use ecpe_cli::config::{read_key_values, RunConfig};
use ecpe_cli::CliError;
use ecpe_core::corpus::{Format, ParseMode};

#[derive(Parser)]
#[command(name = "ecpe", version, about = "Emotion-cause pair extraction as extractive QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Input format: native, jsonl or auto.
    #[arg(long, default_value = "auto")]
    format: String,
    /// Accept documents without gold pairs.
    #[arg(long)]
    prediction_only: bool,
}

impl CorpusArgs {
    fn format(&self) -> Result<Option<Format>, CliError> {
        match self.format.as_str() {
            "auto" => Ok(None),
            f => f.parse().map(Some).map_err(CliError::usage),
        }
    }

    fn mode(&self) -> ParseMode {
        if self.prediction_only {
            ParseMode::PredictionOnly
        } else {
            ParseMode::Annotated
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a raw corpus to jsonl and print its statistics.
    Ingest {
        raw: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Print the pair histogram and mean document length.
    Stats {
        corpus_path: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Draw k random 8:1:1 train/dev/test splits.
    Split {
        corpus_path: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Train, predict and evaluate over every split.
    Run(Box<RunArgs>),
    /// Compare finished runs in one table.
    Report { runs: Vec<PathBuf> },
}

/// Flags override the config file, which overrides the defaults.
#[derive(Args)]
struct RunArgs {
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<String>,
    /// Split file (jsonl) to use instead of drawing k splits.
    #[arg(long)]
    splits: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated: indep, guided_emotion_first, guided_cause_first, ece.
    #[arg(long)]
    variant: Option<String>,
    /// lexical, oracle, toy or bert:<checkpoint dir>.
    #[arg(long)]
    encoder: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    max_seq_len: Option<String>,
    #[arg(long)]
    max_span_tokens: Option<String>,
    /// zh, en or `<emotion question>,<cause question>`.
    #[arg(long)]
    questions: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(short, long)]
    output: Option<String>,
    /// Run splits concurrently.
    #[arg(long)]
    parallel: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let entries = read_key_values(path)?;
            cfg.apply(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        }
        let flags = [
            ("corpus", &self.corpus),
            ("splits", &self.splits),
            ("k", &self.k),
            ("seed", &self.seed),
            ("variant", &self.variant),
            ("encoder", &self.encoder),
            ("epochs", &self.epochs),
            ("learning_rate", &self.learning_rate),
            ("batch_size", &self.batch_size),
            ("max_seq_len", &self.max_seq_len),
            ("max_span_tokens", &self.max_span_tokens),
            ("questions", &self.questions),
            ("format", &self.format),
            ("output", &self.output),
        ];
        cfg.apply(flags.iter().filter_map(|(k, v)| v.as_deref().map(|v| (*k, v))))?;
        if self.parallel {
            cfg.parallel = true;
        }
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { raw, out, corpus } => {
            let stats = cmd_ingest(&raw, &out, corpus.format()?, corpus.mode())?;
            print!("{stats}");
        }
        Command::Stats { corpus_path, corpus } => {
            print!("{}", cmd_stats(&corpus_path, corpus.format()?, corpus.mode())?);
        }
        Command::Split { corpus_path, k, seed, out, corpus } => {
            let splits = cmd_split(&corpus_path, corpus.format()?, k, seed, &out)?;
            for s in &splits {
                println!("split {:02}: {}/{}/{}", s.split_id, s.train.len(), s.dev.len(), s.test.len());
            }
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let summary = cmd_run(&cfg)?;
            if let Ok(table) = std::fs::read_to_string(summary.output.join(ecpe_cli::commands::RESULTS_FILE)) {
                print!("{table}");
            }
            if summary.failures() > 0 {
                return Err(CliError::failure(format!(
                    "{} of {} jobs failed, see {}",
                    summary.failures(),
                    summary.jobs.len(),
                    summary.output.join(SUMMARY_FILE).display()
                )));
            }
        }
        Command::Report { runs } => {
            if runs.is_empty() {
                return Err(CliError::usage("no run directories given"));
            }
            print!("{}", cmd_report(&runs));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CliError::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
