//! `qfock`: the library's computations as a JSON command-line tool.
//!
//! Every invocation writes exactly one JSON document (a [`CommandResult`]).
//! Exit codes: 0 on success, 1 on a usage error (reported on standard error),
//! 2 when the computation fails or a verification suite does not pass.

mod args;
mod commands;
mod output;
mod sample;
mod verify;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::Value;

use args::Cli;
use commands::{dispatch, Failure};
use output::{render, CommandResult, ErrorInfo, Status};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let mut inputs = serde_json::to_value(&cli.command).expect("arguments serialise");
    let outcome = dispatch(&cli.command);
    let elapsed_ms = if cli.common.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let (outputs, status, error, code) = match outcome {
        Ok(o) => {
            if let (Some(doc), Value::Object(map)) = (o.input_document, &mut inputs) {
                map.insert("input_document".into(), doc);
            }
            match o.failed {
                None => (o.outputs, Status::Ok, None, 0),
                Some(err) => (o.outputs, Status::Error, Some(err), 2),
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(Failure::Compute(e)) => (
            Value::Null,
            Status::Error,
            Some(ErrorInfo {
                code: e.code().into(),
                message: e.to_string(),
            }),
            2,
        ),
    };
    let result = CommandResult {
        command: cli.command.name().into(),
        inputs,
        outputs,
        status,
        elapsed_ms,
        error,
    };
    let text = render(&result);
    match &cli.common.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
