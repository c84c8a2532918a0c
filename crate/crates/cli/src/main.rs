use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use wavequant_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = wavequant_cli::CliError::config(e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(out) => {
            if let Some(plan) = out.plan {
                let text = serde_json::to_string_pretty(&plan).expect("plan serializes");
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
            for p in &out.written {
                log::info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
