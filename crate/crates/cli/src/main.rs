use clap::Parser;
use hodgelab_cli::{catalog, render, run, Cli, Command};
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("HODGELAB_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List { section } => Ok(catalog::list(*section)),
        Command::Describe { name } => catalog::describe(name),
        Command::Run(args) => run(args).map(|r| render(&r)),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("hodgelab: {f}");
            ExitCode::from(f.code())
        }
    }
}
