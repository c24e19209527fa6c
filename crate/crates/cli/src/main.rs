mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Settings};
use error::{CliError, Status};

fn run(cli: Cli, s: &Settings) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze { paths } => commands::analyze(paths, s),
        Command::Css { a, b } => commands::css_cmd(a, b, s),
        Command::Diff { a, b } => commands::diff(a, b, s),
        Command::Score { candidate, reference, target, ce } => commands::score(candidate, reference, target.as_deref(), *ce, s),
        Command::Pairs(a) => commands::pairs_cmd(a, s),
        Command::Train(a) => commands::train(a, s),
        Command::Embed { model, tower, paths } => commands::embed(model, *tower, paths, s),
        Command::EvalRetrieval { model, pairs, k } => commands::eval_retrieval_cmd(model, pairs, k, s),
        Command::Corpus(a) => commands::corpus_cmd(a, s),
    }
}

fn fail(err: &CliError, json: bool) -> ExitCode {
    if json {
        eprintln!("{}", err.to_json());
    } else {
        eprintln!("{err}");
    }
    ExitCode::from(err.status as u8)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let json_requested = argv.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) if json_requested => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            return fail(&CliError::usage(first), true);
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(Status::Usage as u8);
        }
    };
    let settings = match Settings::resolve(&cli.global) {
        Ok(s) => s,
        Err(e) => return fail(&e, json_requested),
    };
    match run(cli, &settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, settings.json),
    }
}
