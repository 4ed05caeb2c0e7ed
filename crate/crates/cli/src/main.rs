use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use starnav::engine::{grid_experiment, run, seeded_start, Integrator, RobotKind, RunStatus};
use starnav::scenario::{Scenario, ScenarioError};
use starnav::svg::render_layers;
use starnav::world::{validate_assumptions, MapMode, World};

/// Reactive navigation among familiar star-shaped and unknown convex obstacles.
#[derive(Parser)]
#[command(name = "starnav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario against the navigation assumptions.
    Validate { scenario: PathBuf },
    /// Simulate one run.
    Run {
        scenario: PathBuf,
        /// Robot model; defaults to the one in the scenario.
        #[arg(long, value_enum)]
        robot: Option<Robot>,
        /// Treat every obstacle as unknown (no diffeomorphism).
        #[arg(long)]
        baseline: bool,
        /// Write the trajectory log as CSV.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Write a three-panel SVG figure.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
        /// Start from a random free pose drawn with this seed instead of the
        /// scenario's start.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        integrator: Option<IntegratorArg>,
    },
    /// Run both robot types from many random starts.
    Grid {
        scenario: PathBuf,
        /// Number of start poses.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the summary here instead of standard output.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Robot {
    Full,
    Diffdrive,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Rk4,
    Rk45,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Parse { .. } | ScenarioError::Io { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

fn write(path: &PathBuf, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(path: &PathBuf) -> Result<(Scenario, World), Failure> {
    let scenario = Scenario::load(path)?;
    let world = scenario.build_world()?;
    Ok((scenario, world))
}

fn load_valid(path: &PathBuf) -> Result<(Scenario, World), Failure> {
    let (scenario, world) = load(path)?;
    let report = validate_assumptions(&world);
    if !report.passed() {
        return Err(Failure::Domain(format!("scenario violates the navigation assumptions:\n{report}")));
    }
    Ok((scenario, world))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { scenario } => {
            let (_, world) = load(&scenario)?;
            let report = validate_assumptions(&world);
            print!("{report}");
            if report.passed() {
                println!("all checks passed");
                Ok(())
            } else {
                Err(Failure::Domain("validation failed".into()))
            }
        }
        Command::Run {
            scenario,
            robot,
            baseline,
            csv,
            svg,
            seed,
            integrator,
        } => {
            let (scenario, world) = load_valid(&scenario)?;
            let mut params = scenario.params();
            match integrator {
                Some(IntegratorArg::Rk4) => params.integrator = Integrator::Rk4,
                Some(IntegratorArg::Rk45) => params.integrator = Integrator::Rk45,
                None => {}
            }
            let kind = match robot {
                Some(Robot::Full) => RobotKind::Full,
                Some(Robot::Diffdrive) => RobotKind::DiffDrive,
                None => scenario.robot_kind(),
            };
            let mode = if baseline { MapMode::Baseline } else { MapMode::Semantic };
            let (start, heading) = match seed {
                Some(s) => seeded_start(&world, s),
                None => scenario.start(),
            };
            let (result, log) = run(&world, &params, kind, mode, start, heading, true);
            println!("{result}");
            if let Some(path) = csv {
                write(&path, &log.to_csv())?;
            }
            if let Some(path) = svg {
                let mut discovered: Vec<usize> = result.discoveries.iter().map(|d| d.obstacle).collect();
                discovered.sort_unstable();
                write(&path, &render_layers(&world, &log, &discovered, &result.final_fragments))?;
            }
            match result.status {
                RunStatus::Fault => Err(Failure::Domain("run faulted".into())),
                _ => Ok(()),
            }
        }
        Command::Grid { scenario, n, seed, json } => {
            let (scenario, world) = load_valid(&scenario)?;
            let summary = grid_experiment(&world, &scenario.params(), n as usize, seed);
            let text = summary.to_json();
            match json {
                Some(path) => {
                    write(&path, &text)?;
                    println!(
                        "full: {:.3} converged, diffdrive: {:.3} converged",
                        summary.full.success_rate, summary.diffdrive.success_rate
                    );
                }
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
