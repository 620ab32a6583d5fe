use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use eval_io::cli::{run, Cli};

/// Exit codes: 0 on success, 1 for usage problems, 2 for data errors.
fn main() -> ExitCode {
    if let Some(threads) = std::env::var_os("TNRF_THREADS") {
        let parsed = threads.to_str().and_then(|s| s.trim().parse::<usize>().ok());
        let Some(n) = parsed.filter(|n| *n > 0) else {
            eprintln!("tnrf: TNRF_THREADS must be a positive integer, got {threads:?}");
            return ExitCode::from(1);
        };
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("tnrf: failed to size the thread pool: {err}");
            return ExitCode::from(1);
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help and version go to stdout, diagnostics to stderr.
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("tnrf: {err}");
            ExitCode::from(2)
        }
    }
}
