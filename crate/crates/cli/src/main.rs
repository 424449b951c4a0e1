mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::{is_config_error, run, Context};
use report::write_outputs;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let code = if is_config_error(&e) { 2 } else { 1 };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

/// Runs the command; `Ok(false)` when a contract fails.
fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let args = cli.command.args();
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| commands::ConfigError(format!("--threads: {e}")))?;
    }
    let mut ctx = Context::new(&cli.command)?;
    let outcome = run(&cli.command, &mut ctx)?;
    let manifold_hash = ctx.manifold.hash();
    let (report, table) = outcome.into_report(ctx.config, manifold_hash);
    match &args.out {
        Some(dir) => write_outputs(dir, &report, &table)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(table.render().as_bytes())?;
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.contracts {
        let status = if c.pass { "PASS" } else { "FAIL" };
        eprintln!("[{status}] {}: {}", c.name, c.detail);
    }
    Ok(report.pass)
}
