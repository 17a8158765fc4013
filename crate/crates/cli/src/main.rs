//! `vsql`: train, evaluate and verify variational shadow classifiers.

mod config;
mod fetch;
mod run;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "vsql", version, about = "Variational shadow quantum learning experiments")]
struct Cli {
    /// Caps the worker threads used for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write its checkpoint and metrics CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the training seed and the seed of generated data.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a checkpoint on the held-out split of a dataset.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        /// Dataset JSON from `vsql gen`, or a data spec such as `{"mnist": {...}}`.
        #[arg(long)]
        data: PathBuf,
        /// Defaults to the checkpoint path with a `.predictions.csv` suffix.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Run one of the theory verifiers.
    Verify {
        which: Verifier,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a dataset, or check and cache the MNIST files.
    Gen {
        kind: GenKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output JSON for quantum datasets; cache directory for MNIST.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the single-layer classical network on raw pixels.
    Baseline {
        which: BaselineKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Verifier {
    Theorem3,
    Corollary1,
    BpScan,
    Landscape,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    QsdBinary,
    QsdThree,
    Noisy,
    Mnist,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Mnist,
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Bad input is a usage error; anything that goes wrong while computing or
/// writing results is a runtime error.
impl From<vsql::Error> for CliError {
    fn from(e: vsql::Error) -> Self {
        use vsql::Error as E;
        match e {
            E::Training(_) | E::Io { .. } | E::Encoding(_) => CliError::runtime(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::Train { config, out, seed } => run::train(&config, &out, seed),
        Command::Eval { ckpt, data, predictions } => run::eval(&ckpt, &data, predictions.as_deref()),
        Command::Verify { which, config } => {
            let cfg = config.as_deref();
            match which {
                Verifier::Theorem3 => verify::theorem3(cfg),
                Verifier::Corollary1 => verify::corollary1(cfg),
                Verifier::BpScan => verify::bp_scan(cfg),
                Verifier::Landscape => verify::landscape(cfg),
            }
        }
        Command::Gen { kind, config, out, seed } => match kind {
            GenKind::QsdBinary => run::gen_qsd(config.as_deref(), out.as_deref(), seed, false),
            GenKind::QsdThree => run::gen_qsd(config.as_deref(), out.as_deref(), seed, true),
            GenKind::Noisy => run::gen_noisy(config.as_deref(), out.as_deref(), seed),
            GenKind::Mnist => fetch::gen_mnist(config.as_deref(), out.as_deref()),
        },
        Command::Baseline { which: BaselineKind::Mnist, config, seed } => run::baseline(&config, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
