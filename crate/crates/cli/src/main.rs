use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wcm_cli::commands::{self, Failure, Outcome, ShiftOptions};
use wcm_cli::scene::parse_vec3;
use wcm_core::Vec3;

/// Multi-contact wrench feasibility from the command line. Reports are JSON
/// on stdout. Exit codes: 0 ok or feasible, 1 infeasible or no WCM, 2 bad
/// input.
#[derive(Debug, Parser)]
#[command(name = "wcm", version)]
struct Cli {
    /// Also write the timing table as CSV.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a scene and print its WCM when constrained.
    Analyze { scene: PathBuf },
    /// Is a CoM acceleration (and optionally an angular momentum rate) feasible?
    Check {
        scene: PathBuf,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, value_name = "X,Y,Z")]
        accel: Vec3,
        /// Leave out to let the moment be anything.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, value_name = "X,Y,Z")]
        ldot: Option<Vec3>,
    },
    /// Shift the WCM by a CoM displacement and compare with a rebuild.
    Shift {
        scene: PathBuf,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, value_name = "X,Y,Z")]
        delta: Vec3,
        /// Wrenches sampled for the agreement count.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Timed repetitions of the rebuild and of the shift.
        #[arg(long, default_value_t = 21)]
        reps: usize,
    },
    /// Replay a multi-phase scenario.
    Scenario {
        scenario: PathBuf,
        /// Also write the per-sample timeline as CSV.
        #[arg(long, value_name = "PATH")]
        timeline_csv: Option<PathBuf>,
    },
    /// Time classify, build and shift.
    Bench {
        scene: PathBuf,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Analyze { scene } => commands::analyze(scene),
        Command::Check { scene, accel, ldot } => commands::check(scene, *accel, *ldot),
        Command::Shift { scene, delta, samples, seed, reps } => {
            commands::shift(scene, *delta, &ShiftOptions { samples: *samples, seed: *seed, reps: *reps })
        }
        Command::Scenario { scenario, .. } => commands::scenario(scenario),
        Command::Bench { scene, reps, seed } => commands::bench_scene(scene, *reps, *seed),
    }
}

fn write_csv(path: &PathBuf, table: &commands::Table) -> Result<(), Failure> {
    fs::write(path, table.to_csv())
        .map_err(|e| Failure::Input(anyhow::anyhow!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        if let (Some(path), Some(table)) = (&cli.csv, &out.table) {
            write_csv(path, table)?;
        }
        if let (Command::Scenario { timeline_csv: Some(path), .. }, Some(table)) = (&cli.command, &out.timeline) {
            write_csv(path, table)?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("reports serialize");
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
