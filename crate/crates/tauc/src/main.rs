use clap::Parser;
use tauc::cli::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli, &mut std::io::stdout().lock()) {
        eprintln!("tauc: {e}");
        std::process::exit(e.exit_code());
    }
}
