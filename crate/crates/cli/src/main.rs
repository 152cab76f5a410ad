use std::path::PathBuf;
use std::process::ExitCode;

use blmix_core::experiments::{parse_config, run, ExperimentKind, Overrides};
use blmix_core::Error;
use clap::Parser;

/// Run one Bernoulli-Laplace urn chain experiment from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "blmix", version)]
struct Cli {
    /// One of: profile, mixtime, sweep, coupling, approx, lowerbound, schedule.
    experiment: String,

    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,

    /// Directory for output tables; overrides `output_dir` in the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Master seed; overrides BLMIX_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Upper bound on worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_IO: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var("BLMIX_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Config {
            field: "BLMIX_SEED".into(),
            message: format!("`{v}` is not an unsigned 64-bit integer"),
        }),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let requested = ExperimentKind::parse(&cli.experiment)?;
    let text = std::fs::read_to_string(&cli.config).map_err(|e| Error::Config {
        field: "--config".into(),
        message: format!("cannot read {}: {e}", cli.config.display()),
    })?;
    let config = parse_config(&text)?;
    if config.experiment != requested {
        return Err(Error::Config {
            field: "experiment".into(),
            message: format!(
                "command line asks for `{}` but the config describes `{}`",
                requested.as_str(),
                config.experiment.as_str()
            ),
        });
    }
    let config = config.apply(&Overrides {
        master_seed: cli.seed.or(env_seed()?),
        output_dir: cli.output_dir,
    });
    if cli.threads == Some(0) {
        return Err(Error::Config {
            field: "--threads".into(),
            message: "must be at least 1".into(),
        });
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let output = pool.install(|| run(&config))?;
    for file in &output.files {
        println!("{}", file.display());
    }
    log::info!("metadata written to {}", output.metadata.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("blmix: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
