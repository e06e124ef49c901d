//! Batch front end for the `weakmeas` simulator.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors, 2 when
//! `verify` reports a failing check.

pub mod config;
pub mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use weakmeas::sweep::{
    axis_values, cross_section, grid_sweep, reversal_fidelity_sweep, state_sweep, verify,
    SweepConfig, VerifyConfig, DEFAULT_LOW_STATS_FLOOR,
};

pub use config::{ConfigError, Flags, OutputFormat, RunConfig};
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "weakmeas", version, about = "Weak-measurement information/reversibility tradeoff simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the property battery and emit a JSON report.
    Verify,
    /// Per-state gain and reversal probability over the 51 input states.
    SweepStates,
    /// Analytic and estimated tradeoff over the ε×η grid.
    SweepGrid,
    /// The ε = 0 cross-section over the grid's η values.
    CrossSection,
    /// Tomographic fidelity of the reversed states.
    ReversalFidelity,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::SweepStates => "sweep-states",
            Command::SweepGrid => "sweep-grid",
            Command::CrossSection => "cross-section",
            Command::ReversalFidelity => "reversal-fidelity",
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Simulation(#[from] weakmeas::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

#[derive(Serialize)]
struct Metadata<'a> {
    artifact_version: &'static str,
    product: &'static str,
    seed: u64,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    metadata: Metadata<'a>,
    rows: table::JsonRows<'a>,
}

fn render_table(command: Command, config: &RunConfig, table: &Table) -> Vec<u8> {
    let mut buf = Vec::new();
    match config.output_format {
        OutputFormat::Csv => table.write_csv(&mut buf).expect("in-memory write"),
        OutputFormat::Json => {
            let doc = JsonDocument {
                metadata: Metadata {
                    artifact_version: env!("CARGO_PKG_VERSION"),
                    product: command.name(),
                    seed: config.seed,
                    config,
                },
                rows: table.json_rows(),
            };
            serde_json::to_writer_pretty(&mut buf, &doc).expect("in-memory write");
            buf.push(b'\n');
        }
    }
    buf
}

fn sweep_config(config: &RunConfig) -> SweepConfig {
    SweepConfig {
        grid_size: config.grid_size,
        photons_per_setting: config.photons_per_setting,
        noise: config.noise(),
        seed: config.seed,
        estimation: config.estimation(),
        parallel: true,
    }
}

/// Output bytes plus whether the run passed.
fn execute(command: Command, config: &RunConfig, stderr: &mut dyn Write) -> Result<(Vec<u8>, bool), RunError> {
    let wm = config.instrument();
    let noise = config.noise();
    let table = match command {
        Command::Verify => {
            let started = Instant::now();
            let report = verify(&VerifyConfig {
                sweep: sweep_config(config),
                focus: wm,
                counts_per_basis: config.counts_per_basis,
                mutate_reversal: config.mutate_reversal,
                ..VerifyConfig::default()
            })?;
            let mut buf = serde_json::to_vec_pretty(&report).expect("in-memory write");
            buf.push(b'\n');
            let _ = writeln!(
                stderr,
                "verify: {} checks, {} failed, {:.1} s",
                report.checks.len(),
                report.failures().count(),
                started.elapsed().as_secs_f64()
            );
            for c in report.failures() {
                let _ = writeln!(stderr, "FAIL {} (deviation {:e}, tolerance {:e})", c.name, c.deviation, c.tolerance);
            }
            return Ok((buf, report.passed()));
        }
        Command::SweepStates => {
            Table::states(&state_sweep(&wm, config.photons_per_setting, &noise, config.seed, config.estimation())?)
        }
        Command::SweepGrid => Table::grid(&grid_sweep(&sweep_config(config))?),
        Command::CrossSection => Table::cross_section(&cross_section(
            &axis_values(config.grid_size),
            config.photons_per_setting,
            &noise,
            config.seed,
            config.estimation(),
        )?),
        Command::ReversalFidelity => Table::fidelities(&reversal_fidelity_sweep(
            &wm,
            config.counts_per_basis,
            &noise,
            config.seed,
            config.exact_mode,
            DEFAULT_LOW_STATS_FLOOR,
        )?),
    };
    Ok((render_table(command, config, &table), true))
}

fn emit(config: &RunConfig, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), RunError> {
    match &config.output_path {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(bytes))
            .map_err(|source| RunError::Write {
                path: path.display().to_string(),
                source,
            }),
        None => stdout.write_all(bytes).map_err(|source| RunError::Write {
            path: "standard output".into(),
            source,
        }),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
        }
    };
    let outcome = RunConfig::resolve(&cli.flags)
        .map_err(RunError::from)
        .and_then(|config| {
            let (bytes, passed) = execute(cli.command, &config, stderr)?;
            emit(&config, &bytes, stdout)?;
            Ok(passed)
        });
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY_FAILED,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}
