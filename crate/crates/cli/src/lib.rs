//! Command-line front end for stage co-design studies.
//!
//! `analyze` evaluates one design (plant Bode plot, optionally the
//! bandwidth-optimal controller); `ccd` runs the nested co-design loop.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{analyze, ccd, Summary};
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "stageccd", version, about = "Control co-design for flexible precision motion stages")]
pub struct Cli {
    /// Directory for results; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for the inner sweep (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bode plot of the plant and, with an `inner` section, the optimal loop.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Nested plant/controller co-design.
    Ccd {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Results go to `--output-dir`, else the config's `output_dir`, else
/// `output/<config stem>` under the working directory.
fn output_dir(cli: &Cli, config_path: &Path, cfg: &RunConfig) -> PathBuf {
    cli.output_dir.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| {
        let stem = config_path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        Path::new("output").join(stem)
    })
}

fn execute(cli: &Cli) -> Result<(PathBuf, Summary), CliError> {
    let (Command::Analyze { config } | Command::Ccd { config }) = &cli.command;
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(cli, config, &cfg);
    let job = || match cli.command {
        Command::Analyze { .. } => analyze(&cfg, &dir),
        Command::Ccd { .. } => ccd(&cfg, &dir),
    };
    let summary = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    Ok((dir, summary))
}

/// Parse `args` (program name first), run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok((dir, summary)) => {
            println!("wrote {} files to {}", summary.files.len(), dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
