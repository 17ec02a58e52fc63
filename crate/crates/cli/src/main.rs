mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::json;

use args::Cli;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<hedgecost::Error>()) {
        Some(e) if !e.is_config() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut report = commands::run(&cli.command)?;
    let body = std::mem::take(&mut report.json);
    let mut json = json!({
        "command": cli.command.name(),
        "config": {
            "global": cli.global,
            "args": commands::echo(&cli.command),
        },
    });
    if let (Some(out), serde_json::Value::Object(fields)) = (json.as_object_mut(), body) {
        out.extend(fields);
    }
    report.json = json;
    output::write(&report, cli.global.format, cli.global.output.as_deref())
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
