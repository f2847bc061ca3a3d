//! Command-line front end for `aggregation-core`.
//!
//! Every command returns a [`Rendered`] value: the payload (text, CSV or
//! JSON), a [`RunManifest`] with a checksum of that payload, and the process
//! exit code. JSON payloads embed their manifest; CSV and text written with
//! `--out` get a `<out>.manifest.json` sidecar.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 data-validation failure,
//! 4 non-convergence.

pub mod args;
pub mod commands;
pub mod output;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

pub use args::{Cli, Command};
pub use commands::{load_model, CliError, ERROR_CURVE_HEADER, SWEEP_RATES_HEADER};
pub use output::{Payload, Rendered, RunManifest};

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs one command on a pool of `cli.workers` threads.
pub fn run(cli: &Cli) -> Result<Rendered, CliError> {
    let workers = cli.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError {
            code: output::EXIT_INTERNAL,
            message: format!("worker pool: {e}"),
        })?;

    let started = Instant::now();
    let outcome = pool.install(|| commands::execute(&cli.command))?;
    let duration = started.elapsed().as_secs_f64();

    let mut params = serde_json::to_value(&cli.command).expect("arguments serialize");
    if let serde_json::Value::Object(map) = &mut params {
        map.insert("workers".into(), workers.into());
    }
    let manifest = RunManifest::new(
        cli.command.name(),
        params,
        cli.command.seed(),
        &outcome.payload,
        duration,
    );
    Ok(Rendered {
        payload: outcome.payload,
        manifest,
        exit_code: outcome.exit_code,
        diagnostics: outcome.diagnostics,
    })
}

/// Writes the body to `out` (or standard output) plus the sidecar manifest
/// when there is one and the output is a file.
pub fn emit(rendered: &Rendered, out: Option<&Path>) -> std::io::Result<()> {
    let body = rendered.body();
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            if let Some(sidecar) = rendered.sidecar() {
                let mut name = path.as_os_str().to_owned();
                name.push(".manifest.json");
                std::fs::write(name, sidecar)?;
            }
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Parses `argv` and runs it, as the binary does, without touching the process.
pub fn run_args<I, T>(argv: I) -> Result<Rendered, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::usage(e.to_string()))?;
    run(&cli)
}
