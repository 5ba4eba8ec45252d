//! Binary entry point: parse arguments, run the experiment, print the
//! summary. Configuration problems exit with 2, numeric failures with 3.

use clap::Parser;

use squeezesim::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
