use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ris_secrecy::experiments::{
    emit_csv, load_config, metadata_path, ConfigOverrides, RunMetadata, RunOptions,
};
use ris_secrecy::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Secrecy-rate sweeps for RIS-aided downlinks with a jamming eavesdropper"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write CSV plus metadata.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Figure preset (2, 3, 4 or 5); overrides the file's `preset`.
        #[arg(long)]
        preset: Option<u8>,
        /// Master seed; overrides the file's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        /// Record per-run wall times in the CSV (rows then differ between reruns).
        #[arg(long)]
        timing: bool,
    },
    /// Resolve and check a config file, printing the effective configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Single-line JSON error report on stderr.
fn report(e: &Error) {
    let (kind, key) = match e {
        Error::InvalidParameter { key, .. } => ("invalid_parameter", Some(key.as_str())),
        Error::Config(_) => ("config", None),
        Error::Io(_) => ("io", None),
        Error::NonFinite(_) => ("non_finite", None),
        Error::DimensionMismatch { .. } => ("dimension_mismatch", None),
        Error::NotHermitian { .. } | Error::NotPsd { .. } | Error::IllConditioned { .. } => {
            ("numerical", None)
        }
        Error::Numerical(_) => ("numerical", None),
    };
    let line = serde_json::json!({ "error": kind, "key": key, "message": e.to_string() });
    eprintln!("{line}");
}

fn execute(cli: Cli) -> ris_secrecy::Result<()> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load_config(&config, ConfigOverrides::default())?;
            print!("{}", cfg.to_toml());
        }
        Command::Run {
            config,
            preset,
            seed,
            out,
            jobs,
            timing,
        } => {
            let cfg = load_config(&config, ConfigOverrides { preset, seed })?;
            let start = Instant::now();
            let rows = cfg.run(&RunOptions {
                jobs,
                record_wall_time: timing,
            })?;
            emit_csv(&rows, &out)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let meta = metadata_path(&out);
            RunMetadata::new(&cfg, rows.len(), jobs, elapsed).write(&meta)?;
            log::info!(
                "wrote {} rows to {} ({:.0} ms)",
                rows.len(),
                out.display(),
                elapsed
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(2)
        }
    }
}
