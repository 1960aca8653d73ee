mod args;
mod commands;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()?;
    let (name, result) = pool.install(|| match &cli.command {
        Command::Render(a) => ("render", commands::render(a)),
        Command::Puzzle(a) => ("puzzle", commands::puzzle_cmd(a)),
        Command::Tableau(a) => ("tableau", commands::tableau(a)),
        Command::Moduli(a) => ("moduli", commands::moduli(a)),
        Command::Area(a) => ("area", commands::area(a)),
        Command::Renorm(a) => ("renorm", commands::renorm(a)),
    });
    let run = result?;
    let manifest = run
        .out
        .finish(name, [common.c.re, common.c.im], run.settings)?;
    for f in &manifest.outputs {
        println!("{}  {}", f.sha256, f.path);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
