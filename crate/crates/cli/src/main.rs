use clap::Parser;
use twistlab::app::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("twistlab: {e}");
        std::process::exit(e.exit_code());
    }
}
