//! `qrd`: command line front end.
//!
//! Exit codes: 0 success, 2 flow ended without meeting the residual
//! tolerances, 3 precondition failure (bad config or inputs, area mismatch),
//! 4 solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qrd::io::{
    energy_csv_row, read_meta, read_snapshot, render_svg, run_distance_pipeline, run_flow_pipeline, run_init,
    snapshot_energy, RunArtifacts, RunConfig, RunStatus, ENERGY_HEADER, META_FILE,
};
use qrd::Error;

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "qrd", version, about = "Quasi-rigid area-preserving deformations between planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the initial area-preserving map and store it as a snapshot.
    Init {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the descent flow, from the initial map or from a snapshot.
    Flow {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run the whole pipeline and print the distance estimate.
    Distance {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the energies of a stored map as one CSV row.
    Energy {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a stored map to SVG.
    Render {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the configuration recorded in the run's meta.json.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_PRECONDITION) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_precondition() { EXIT_PRECONDITION } else { EXIT_SOLVER })
        }
    }
}

fn run(command: Command) -> qrd::Result<ExitCode> {
    match command {
        Command::Init { config } => {
            let out = run_init(&RunConfig::from_file(&config)?)?;
            println!("initial map: {}", out.snapshot_paths[0].display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Flow { config, resume } => {
            let out = run_flow_pipeline(&RunConfig::from_file(&config)?, resume.as_deref())?;
            Ok(report(&out))
        }
        Command::Distance { config } => {
            let out = run_distance_pipeline(&RunConfig::from_file(&config)?)?;
            let code = report(&out);
            println!("distance {}", out.distance.unwrap_or(f64::NAN));
            Ok(code)
        }
        Command::Energy { snapshot, config } => {
            let e = snapshot_energy(&RunConfig::from_file(&config)?, &snapshot)?;
            println!("{ENERGY_HEADER}");
            println!("{}", energy_csv_row(&e));
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { snapshot, out, config } => {
            let config = match config {
                Some(path) => RunConfig::from_file(&path)?,
                None => recorded_config(&snapshot)?,
            };
            let s = config.setup()?;
            let phi = read_snapshot(&snapshot, s.source.clone(), s.target.clone())?;
            render_svg(&phi, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn report(out: &RunArtifacts) -> ExitCode {
    let m = &out.meta;
    println!(
        "status {:?}, {} accepted and {} rejected steps, output in {}",
        m.status,
        m.accepted_steps,
        m.rejected_steps,
        out.run_dir.display()
    );
    match m.status {
        RunStatus::Converged | RunStatus::Initialized => ExitCode::SUCCESS,
        RunStatus::MaxSteps | RunStatus::Stalled => ExitCode::from(EXIT_NOT_CONVERGED),
        RunStatus::Failed => ExitCode::from(EXIT_SOLVER),
    }
}

/// Configuration stored in the meta.json of the run a snapshot belongs to:
/// the snapshot's directory or its parent.
fn recorded_config(snapshot: &Path) -> qrd::Result<RunConfig> {
    let dir = snapshot.parent().unwrap_or(Path::new("."));
    for candidate in [dir.join(META_FILE), dir.join("..").join(META_FILE)] {
        if candidate.exists() {
            return Ok(read_meta(&candidate)?.config);
        }
    }
    Err(Error::BadConfig(format!("no {META_FILE} next to {}; pass --config", snapshot.display())))
}
