mod benchmark;
mod config;
mod generate;
mod manifest;
mod train;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;

/// Integrated cook scheduling and vehicle dispatching for ghost kitchens.
#[derive(Debug, Parser)]
#[command(name = "ghostkitchen", version)]
struct Cli {
    /// Root of the default output directories.
    #[arg(long, global = true, env = "GHOSTKITCHEN_OUT", default_value = "runs")]
    out_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample days of orders into JSON files.
    Generate(generate::GenerateArgs),
    /// Train a value network and write a checkpoint and learning curve.
    Train(train::TrainArgs),
    /// Simulate days under several policies and tabulate KPIs.
    Benchmark(benchmark::BenchmarkArgs),
    /// Run a self-check suite; exits 1 if any case fails.
    Validate(validate::ValidateArgs),
}

/// Options shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML or JSON file overlaying the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance preset: small, medium, large, desk or l1..l12.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to a name under the output root.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or arguments (exit 2).
    Config(anyhow::Error),
    /// A check failed (exit 1).
    Validation(String),
    /// Anything else, such as I/O (exit 1).
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

pub trait ConfigContext<T> {
    fn config_err(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ConfigContext<T> for Result<T, E> {
    fn config_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
}

/// Settings every command resolves before running.
pub struct Resolved {
    pub file: FileConfig,
    pub file_bytes: Option<Vec<u8>>,
    pub config_path: Option<PathBuf>,
    pub preset: String,
    pub seed: u64,
}

impl Common {
    pub fn resolve(&self) -> Result<Resolved, Failure> {
        let (file, file_bytes) = match &self.config {
            Some(p) => {
                let (f, b) = FileConfig::load(p).config_err()?;
                (f, Some(b))
            }
            None => (FileConfig::default(), None),
        };
        let preset = config::pick(self.preset.clone(), file.preset.as_ref(), config::DEFAULT_PRESET.to_owned());
        let seed = config::pick(self.seed, file.seed.as_ref(), 0);
        Ok(Resolved {
            file,
            file_bytes,
            config_path: self.config.clone(),
            preset,
            seed,
        })
    }
}

impl Resolved {
    pub fn out_dir(&self, common: &Common, root: &Path, name: &str) -> PathBuf {
        common
            .out
            .clone()
            .unwrap_or_else(|| root.join(format!("{name}-{}-s{}", self.preset, self.seed)))
    }

    /// Starts a run record, registering the config file as an input.
    pub fn run(&self, command: &str, out: PathBuf) -> manifest::Run {
        let mut run = manifest::Run::new(command, self.config_path.as_deref(), self.seed, &self.preset, out);
        if let (Some(p), Some(b)) = (&self.config_path, &self.file_bytes) {
            run.input(p, b);
        }
        run
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate::run(a, &cli.out_root),
        Command::Train(a) => train::run(a, &cli.out_root),
        Command::Benchmark(a) => benchmark::run(a, &cli.out_root),
        Command::Validate(a) => validate::run(a, &cli.out_root),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
