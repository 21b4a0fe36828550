use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use srpctl_cli::{dispatch, CliError, Command, Format, RunConfig};

/// Observer-based orbit-maneuver control under solar radiation pressure.
#[derive(Debug, Parser)]
#[command(name = "srpctl", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Scenario file (JSON). Defaults apply to every missing key.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Directory for output files; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Format of series files.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Scenario override, `key=value` with dotted keys; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::Input(first.to_string()).diagnostic());
            return ExitCode::from(2);
        }
    };
    let cfg = RunConfig {
        command: cli.command,
        scenario_path: cli.scenario,
        output_dir: cli.out,
        format: cli.format,
        overrides: cli.overrides,
    };
    match dispatch(&cfg) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
            // A closed pipe downstream is not an error of this program.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
