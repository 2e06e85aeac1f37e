mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::CliError;

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let format = |default| cli.format.unwrap_or(default);
    match &cli.command {
        Command::Solve(a) => commands::solve(a, format(Format::Csv)),
        Command::Simulate(a) => commands::simulate(a, format(Format::Json), cli.seed),
        Command::Couple(a) => commands::couple(a, format(Format::Json), cli.seed),
        Command::Optimize(a) => commands::optimize(a, format(Format::Json)),
        Command::Bounds(a) => match cli.format {
            Some(Format::Csv) => Err(CliError::Usage("bounds emits JSON only".into())),
            _ => commands::bounds(a),
        },
        Command::Scan(a) => commands::scan(a, format(Format::Csv)),
        Command::Env(a) => commands::env(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| {
        match &cli.output {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
