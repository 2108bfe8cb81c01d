use clap::Parser;
use hrgroup::runner::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => println!("{}", dir.display()),
        Err(e) => {
            eprintln!("hrgroup {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
