use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pointdyn::systems::SystemDescriptor;
use pointdyn_cli::{parse_record, run, run_suite, verify_record, write_report, ExperimentConfig, Format, SuiteName, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "pointdyn", version, about = "Pointwise dynamics workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config. Exit 0 holds, 1 fails with witness, 2 inconclusive.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `output.path`. Without either the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Re-check an entropy certificate or trace record (bare or inside a run report).
    VerifyCertificate { path: PathBuf },
    /// Run a canned battery and print its summary table.
    Suite {
        #[arg(value_enum)]
        name: SuiteName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available systems.
    Systems {
        #[command(subcommand)]
        action: SystemsAction,
    },
}

#[derive(Subcommand)]
enum SystemsAction {
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<i32> {
    match cmd {
        Command::Run { config, seed, out, format } => {
            let text = fs::read_to_string(&config).with_context(|| format!("cannot read {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(f) = format {
                cfg.output.format = f;
            }
            let dir = out.or_else(|| cfg.output.path.clone());
            let (report, csv) = run(&cfg)?;
            match dir {
                Some(d) => {
                    write_report(&d, &report, csv.as_deref(), cfg.output.format)?;
                    println!("{}: {} (exit {})", report.operation, report.status, report.exit_code);
                }
                None if cfg.output.format == Format::Csv && csv.is_some() => print!("{}", csv.unwrap_or_default()),
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            Ok(report.exit_code)
        }
        Command::VerifyCertificate { path } => {
            let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            let record = parse_record(&text)?;
            let problems = verify_record(&record)?;
            if problems.is_empty() {
                println!("ok");
                Ok(0)
            } else {
                for p in &problems {
                    println!("FAIL {p}");
                }
                Ok(1)
            }
        }
        Command::Suite { name, seed, out } => {
            let report = run_suite(name, seed)?;
            print!("{}", report.summary());
            if let Some(d) = out {
                report.write(&d)?;
            }
            Ok(if report.failures() == 0 { 0 } else { 1 })
        }
        Command::Systems { action: SystemsAction::List } => {
            for (id, about) in SystemDescriptor::catalogue() {
                println!("{id:<20} {about}");
            }
            Ok(0)
        }
    }
}
