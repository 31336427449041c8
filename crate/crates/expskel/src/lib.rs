//! Command-line front end for `expskel-core`: JSON and SVG in and out.
//!
//! Exit codes: 0 on success, 1 on bad input, 2 when a requested
//! verification fails (the JSON report is still written).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub mod cli;
pub mod dto;
pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Json { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{0}")]
    Input(String),
    #[error("EXPSKEL_THREADS must be a positive integer, got {0:?}")]
    Threads(String),
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EXPSKEL_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or(CliError::Threads(v))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Input(e.to_string()))
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| cli::execute(&parsed.command)));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let written = match cli::output_path(&parsed.command) {
        Some(p) => std::fs::write(p, &outcome.json).map_err(|e| CliError::Io { path: p.to_path_buf(), source: e }),
        None => std::io::stdout()
            .write_all(outcome.json.as_bytes())
            .map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    if let Some(m) = &outcome.message {
        eprintln!("{}: {m}", if outcome.verified { "warning" } else { "verification failed" });
    }
    if outcome.verified {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
