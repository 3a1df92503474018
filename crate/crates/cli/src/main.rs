use clap::error::ErrorKind;
use clap::Parser;

use didactic_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DIDACTIC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[Usage]: {}", first.trim_start_matches("error: "));
            std::process::exit(2);
        }
    };
    match run(cli) {
        Ok(summary) => println!("{}", summary.trim_end()),
        Err(e) => {
            eprintln!("{}", e.line());
            std::process::exit(e.exit_code());
        }
    }
}
