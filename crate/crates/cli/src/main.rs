use clap::Parser;

use rdseg_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            for f in &m.files {
                println!("{}", f.path);
            }
        }
        Err(e) => {
            eprintln!("rdseg {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
