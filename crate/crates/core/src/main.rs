use clap::Parser;

use daemor::cli::{init_threads, run, Cli, ErrorReport};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads().and_then(|_| run(cli)) {
        let report = ErrorReport {
            code: e.code(),
            message: e.to_string(),
        };
        eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| e.to_string()));
        std::process::exit(e.exit_status());
    }
}
