use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use embedscope::gam::{load_model, read_corpus};
use embedscope::preprocess::load_stopwords;
use embedscope::{load_glove, Error, ErrorKind, OovPolicy, ScoringConfig};
use embedscope_cli::{analyze_output, gap_output, train_output, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(name = "embedscope", version, about = "Token attribution over static word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Score each token of a prompt and render a relevance map.
    Analyze {
        /// Prompt text.
        #[arg(conflicts_with = "input", required_unless_present = "input")]
        text: Option<String>,
        /// Read the prompt from a file instead.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit the percentile model on a corpus (one prompt per line).
    TrainGam { corpus: PathBuf },
    /// Compare a summary against its source text.
    Gap { source: PathBuf, summary: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Oov {
    Zero,
    Skip,
    Error,
}

#[derive(Args)]
struct Common {
    /// GloVe-format embedding file.
    #[arg(long, global = true, env = "EMBEDSCOPE_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "zero")]
    oov: Oov,
    /// Keep stopwords emphasized in maps and in gap matching.
    #[arg(long, global = true)]
    no_stopword_filter: bool,
    /// Replace the built-in stopword list (one word per line, # comments).
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 2.0)]
    opposite_sign_weight: f64,
    /// Report raw magnitude scores above 1 instead of clamping.
    #[arg(long, global = true)]
    no_magnitude_clamp: bool,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rank tokens by a trained model's predicted percentile.
    #[arg(long, global = true)]
    gam_model: Option<PathBuf>,
    /// Interior knots per model term.
    #[arg(long, global = true, default_value_t = 10)]
    knots: usize,
    #[arg(long, global = true, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, global = true, default_value_t = embedscope::gam::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, default_value_t = embedscope::gap::DEFAULT_SIM_THRESHOLD)]
    sim_threshold: f64,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Io => 3,
        ErrorKind::Data => 4,
        ErrorKind::Degenerate => 5,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Usage => "usage",
        ErrorKind::Io => "io",
        ErrorKind::Data => "data",
        ErrorKind::Degenerate => "degenerate input",
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_output(out: Option<&Path>, contents: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let c = cli.common;
    let embeddings = c
        .embeddings
        .ok_or_else(|| Error::InvalidArgument("--embeddings (or EMBEDSCOPE_EMBEDDINGS) is required".into()))?;
    let scoring = ScoringConfig {
        opposite_sign_weight: c.opposite_sign_weight,
        magnitude_clamp: !c.no_magnitude_clamp,
        ..ScoringConfig::default()
    };
    scoring.validate()?;
    if !(c.sim_threshold.is_finite()) {
        return Err(Error::InvalidArgument("--sim-threshold must be finite".into()));
    }
    let table = load_glove(&embeddings)?;
    let mut run = RunConfig::new(table.source_id());
    run.analysis.scoring = scoring;
    run.analysis.oov = match c.oov {
        Oov::Zero => OovPolicy::ZeroVector,
        Oov::Skip => OovPolicy::Skip,
        Oov::Error => OovPolicy::Error,
    };
    if let Some(path) = &c.stopwords {
        run.analysis.preprocess.set_stopwords(load_stopwords(path)?);
    }
    run.filter_stopwords = !c.no_stopword_filter;
    run.format = c.format;
    run.out = c.out.clone();
    run.gam_model = c.gam_model.clone();
    run.knots = c.knots;
    run.cv_folds = c.cv_folds;
    run.seed = c.seed;
    run.sim_threshold = c.sim_threshold;

    match cli.command {
        Command::Analyze { text, input } => {
            let text = match (text, input) {
                (Some(t), _) => t,
                (None, Some(path)) => read_text(&path)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let gam = c.gam_model.as_deref().map(load_model).transpose()?;
            let output = analyze_output(&text, &table, &run, gam.as_ref())?;
            write_output(c.out.as_deref(), &output)
        }
        Command::TrainGam { corpus } => {
            let prompts = read_corpus(&corpus)?;
            let training = train_output(&prompts, &table, &run)?;
            write_output(c.out.as_deref(), &training.model_json)?;
            if c.out.is_some() {
                write_output(None, &training.report)
            } else {
                eprint!("{}", training.report);
                Ok(())
            }
        }
        Command::Gap { source, summary } => {
            let source_text = read_text(&source)?;
            let summary_text = read_text(&summary)?;
            let output = gap_output(&source_text, &summary_text, &table, &run)?;
            write_output(c.out.as_deref(), &output)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            eprintln!("embedscope: {} error: {e}", kind_name(kind));
            ExitCode::from(exit_code(kind))
        }
    }
}
