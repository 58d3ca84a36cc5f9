//! Corpus workflow for bootstrapping note transcriptions: compose exercises,
//! synthesize or record takes, train note models from a few manually
//! labelled takes, align the rest and evaluate.
//!
//! [`run`] is the whole command-line program; the `fretalign` binary only
//! forwards its arguments and exit code.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{Context, Outcome, Strings};
pub use config::RunConfig;
pub use corpus::{CorpusLayout, LabelKind, TakeId};
pub use error::{CliError, EXIT_CONFIG, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK, EXIT_PARTIAL};

#[derive(Debug, Parser)]
#[command(name = "fretalign", version, about = "Bootstrap time-aligned note labels for guitar exercise recordings")]
pub struct Cli {
    /// Corpus root directory.
    #[arg(long, global = true, default_value = ".")]
    pub root: PathBuf,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write exercise note sequences for one string or all.
    Compose {
        #[arg(default_value = "all")]
        strings: Strings,
        /// Exercises per string.
        #[arg(long)]
        count: Option<usize>,
        /// Notes per exercise.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Render synthetic takes with ground-truth and bootstrap labels.
    Synth {
        #[arg(default_value = "all")]
        strings: Strings,
        /// Takes per exercise.
        #[arg(long)]
        takes: Option<usize>,
    },
    /// Train note models from the manual labels.
    Train {
        #[arg(default_value = "all")]
        strings: Strings,
    },
    /// Align every take without manual labels.
    Align {
        #[arg(default_value = "all")]
        strings: Strings,
        /// Apply the per-file median shift against truth or manual labels.
        #[arg(long)]
        shift_correct: bool,
    },
    /// Compare predicted labels with reference labels.
    Eval {
        /// Defaults to labels/auto under the root.
        #[arg(long)]
        predicted: Option<PathBuf>,
        /// Defaults to labels/truth under the root.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Inventory of files, takes and notes.
    Stats,
    /// Move every label in a file or directory by a constant.
    Shift {
        /// Milliseconds; positive moves labels later.
        #[arg(long, allow_hyphen_values = true)]
        ms: f64,
        input: PathBuf,
        /// Output file or directory.
        #[arg(long)]
        output: PathBuf,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for pair in &cli.set {
        cfg.apply_override(pair)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Compose { count, length, .. } => {
            if let Some(c) = count {
                cfg.count = *c;
            }
            if length.is_some() {
                cfg.length = *length;
            }
        }
        Command::Synth { takes: Some(t), .. } => cfg.takes = *t,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one already-parsed invocation.
pub fn execute(cli: &Cli, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let config = resolve_config(cli)?;
    let _ = writeln!(err, "# resolved configuration");
    let _ = write!(err, "{}", config.csv_preamble());
    let jobs = match cli.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let ctx = Context {
        layout: CorpusLayout::new(&cli.root),
        config,
        force: cli.force,
        jobs,
    };
    match &cli.command {
        Command::Compose { strings, .. } => commands::compose(&ctx, *strings),
        Command::Synth { strings, .. } => commands::synth(&ctx, *strings),
        Command::Train { strings } => commands::train_models(&ctx, *strings),
        Command::Align { strings, shift_correct } => commands::align(&ctx, *strings, *shift_correct),
        Command::Eval { predicted, reference } => {
            let p = predicted.clone().unwrap_or_else(|| ctx.layout.labels_dir(LabelKind::Auto));
            let r = reference.clone().unwrap_or_else(|| ctx.layout.labels_dir(LabelKind::Truth));
            commands::eval(&ctx, &p, &r)
        }
        Command::Stats => commands::stats(&ctx),
        Command::Shift { ms, input, output } => commands::shift(&ctx, *ms, input, output),
    }
}

/// The whole program: parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    match execute(&cli, err) {
        Ok(outcome) => {
            let _ = write!(out, "{}", outcome.stdout);
            for f in &outcome.failures {
                let _ = writeln!(err, "failed: {f}");
            }
            if outcome.failures.is_empty() {
                EXIT_OK
            } else {
                let _ = writeln!(err, "{} failure(s)", outcome.failures.len());
                EXIT_PARTIAL
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
