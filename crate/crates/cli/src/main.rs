use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use paqft_cli::config::RunConfig;
use paqft_cli::report::Format;
use paqft_cli::{run, threads_from_env, RunError};

#[derive(Parser)]
#[command(name = "paqft", version, about = "Run lattice pAQFT check suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites named in a config file and write a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report path; defaults to the config's output, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
        /// Replaces the config's experiment list; repeatable.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Record wall time per check; reports are then not byte-stable.
        #[arg(long)]
        timings: bool,
    },
    /// Print the reference configuration.
    Reference,
}

fn execute(cli: Cli) -> Result<bool, RunError> {
    match cli.command {
        Command::Reference => {
            print!("{}", RunConfig::reference().to_text());
            Ok(true)
        }
        Command::Run { config, out, format, suites, timings } => {
            let mut cfg = RunConfig::load(&config)?;
            if !suites.is_empty() {
                cfg.run.experiments = suites;
            }
            let validated = cfg.validate()?;
            let report = run(&validated, threads_from_env()?, timings)?;
            match out.or_else(|| cfg.run.output.as_ref().map(PathBuf::from)) {
                Some(path) => report.emit(format, &path)?,
                None => print!("{}", report.render(format)),
            }
            for c in report.checks.iter().filter(|c| !c.is_pass()) {
                eprintln!("FAIL {}/{}: residual {:e} > {:e}", c.suite, c.check_id, c.residual, c.tolerance);
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
