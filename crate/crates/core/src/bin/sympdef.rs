//! Scenario-driven checks for simultaneous deformations of `(ω, L)` on flat tori.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use sympdef::suite::{self, Report, RunFlags, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Cohomology,
    Classify,
    Witness,
    Moser,
    Gronwall,
    McCheck,
    Gauge,
    VdataJacobi,
    Diagram,
    Prolong,
    PhiL,
    All,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Cohomology => Subcommand::Cohomology,
            Command::Classify => Subcommand::Classify,
            Command::Witness => Subcommand::Witness,
            Command::Moser => Subcommand::Moser,
            Command::Gronwall => Subcommand::Gronwall,
            Command::McCheck => Subcommand::McCheck,
            Command::Gauge => Subcommand::Gauge,
            Command::VdataJacobi => Subcommand::VdataJacobi,
            Command::Diagram => Subcommand::Diagram,
            Command::Prolong => Subcommand::Prolong,
            Command::PhiL => Subcommand::PhiL,
            Command::All => Subcommand::All,
        }
    }
}

/// Runs one check group (or all of them) on a scenario and writes a JSON report.
///
/// Exit codes: 0 all checks pass, 1 a check failed, 2 scenario error, 3 internal error.
#[derive(Debug, Parser)]
#[command(name = "sympdef", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Report path; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    out: String,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the RK4 step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Includes sampled flow grids in the report.
    #[arg(long)]
    dump_grid: bool,
    /// Caps the arity of derived brackets.
    #[arg(long)]
    max_arity: Option<usize>,
    /// Adds wall-clock timings (the report is then no longer reproducible byte for byte).
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub: Subcommand = cli.command.into();
    let report = match std::fs::read_to_string(&cli.scenario) {
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.scenario.display());
            return ExitCode::from(2);
        }
        Ok(raw) => match suite::parse_scenario(&raw) {
            Err(e) => {
                eprintln!("{}: {e}", cli.scenario.display());
                Report::unreadable(sub, &raw, &e)
            }
            Ok(sc) => {
                let flags = RunFlags {
                    seed: cli.seed,
                    steps: cli.steps,
                    dump_grid: cli.dump_grid,
                    max_arity: cli.max_arity,
                    timings: cli.timings,
                };
                suite::run(sub, &sc, &raw, &flags)
            }
        },
    };
    for c in &report.checks {
        eprintln!(
            "{} {:<34} {:>12.3e} <= {:.1e}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    for e in &report.errors {
        eprintln!("error [{}] {}: {}", e.kind, e.group, e.message);
    }
    let json = report.to_json();
    if cli.out == "-" {
        print!("{json}");
    } else if let Err(e) = std::fs::write(&cli.out, json) {
        eprintln!("cannot write {}: {e}", cli.out);
        return ExitCode::from(3);
    }
    ExitCode::from(report.exit_code() as u8)
}
