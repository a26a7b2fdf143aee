use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qamean_cli::args::Cli;
use qamean_cli::run;

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    let out = match args.into_job() {
        Ok(job) => run(command, &job),
        Err(e) => qamean_cli::Outcome {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: e.exit_code(),
        },
    };
    // a closed pipe is not worth a panic
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
