use clap::Parser;
use fleetsim::cli::{self, Cli};

fn main() {
    let args = match Cli::try_parse() {
        Ok(args) => args,
        // Exit code 2 is reserved for all-unstable runs; bad arguments are 1.
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = cli::run(args) {
        eprintln!("error: {e}");
        std::process::exit(i32::from(e.exit_code()));
    }
}
