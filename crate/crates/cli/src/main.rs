use std::process::ExitCode;

use aggregation_cli::output::EXIT_INTERNAL;
use aggregation_cli::{emit, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rendered = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code as u8);
        }
    };
    for line in &rendered.diagnostics {
        eprintln!("{line}");
    }
    if let Err(e) = emit(&rendered, cli.out.as_deref()) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(EXIT_INTERNAL as u8);
    }
    ExitCode::from(rendered.exit_code as u8)
}
