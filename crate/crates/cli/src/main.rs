/// Stdout writes that ignore a closed pipe (`nmvec run | head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod args;
mod commands;
mod error;
mod spec;
mod suite;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

const SUBCOMMANDS: [&str; 6] = ["gen", "prune", "info", "run", "bench", "multicore"];

/// Finds `--config FILE` / `--config=FILE` in raw arguments.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// `key = value` lines become `--key value`; `key = true` and a bare `key`
/// become `--key`, `key = false` is dropped.
fn config_args(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (line, None),
        };
        if key.is_empty() || key.contains(char::is_whitespace) || key == "config" {
            return Err(CliError::Input(format!("config line {}: bad key `{key}`", i + 1)));
        }
        match value {
            Some("false") => {}
            None | Some("true") => out.push(format!("--{key}").into()),
            Some(v) => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Splices config-file flags in right after the subcommand, so flags given
/// on the command line come later and win.
fn expand_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.to_string_lossy())))?;
    let extra = config_args(&text)?;
    let at = argv.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    if let Some(at) = at {
        argv.splice(at + 1..at + 1, extra);
    }
    Ok(argv)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Prune(a) => commands::prune(a),
        Command::Info(a) => commands::info(a),
        Command::Run(a) => commands::run(a),
        Command::Bench(a) => commands::bench(a),
        Command::Multicore(a) => commands::multicore(a),
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("nmvec: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmvec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
