use clap::Parser;

use gossipcalc_cli::{run_experiment, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run_experiment(&cli) {
        eprintln!("gossipcalc: {e}");
        std::process::exit(e.exit_code());
    }
}
