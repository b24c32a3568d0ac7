use std::process::ExitCode;

use clap::Parser;
use dpmkit_cli::cli::{run, Cli};

fn main() -> ExitCode {
    // Usage errors from clap exit with code 2 on their own.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&r.json).expect("json"));
            } else {
                print!("{}", r.table);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dpmkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
