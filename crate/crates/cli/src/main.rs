use std::process::ExitCode;

use clap::Parser;
use proxsdca_cli::{run_cli, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap's own usage status is 2, which here means "not converged".
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run_cli(&cli, std::io::stdout().lock(), std::io::stderr().lock()))
}
