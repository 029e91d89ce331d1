use clap::Parser;

use hsfuse_cli::args::Cli;

fn main() {
    // clap itself exits with code 2 on usage errors.
    let cli = Cli::parse();
    if let Err(failure) = hsfuse_cli::run(&cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}
