//! Command-line driver: simulate, ingest, label, extract, split, train,
//! evaluate and report, each stage reading and writing plain files.

pub mod args;
pub mod config;
pub mod manifest;
pub mod stages;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

use args::{Cli, Command};

/// A bad invocation rather than bad data; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("RUGGUARD_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs one invocation and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::merge_config(argv) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => stages::simulate(a),
        Command::Ingest(a) => stages::ingest(a),
        Command::Label(a) => stages::label(a),
        Command::Extract(a) => stages::extract_features(a),
        Command::Split(a) => stages::split(a),
        Command::Train(a) => stages::train(a),
        Command::Evaluate(a) => stages::evaluate_model(a),
        Command::Report(a) => stages::report(a).map(|table| {
            if a.out.is_none() {
                print!("{table}");
            }
        }),
        Command::Pipeline(a) => stages::pipeline(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &anyhow::Error) -> i32 {
    eprintln!("error: {e:#}");
    if e.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}
