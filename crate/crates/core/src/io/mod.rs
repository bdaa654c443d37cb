//! Run configuration, orchestration and persistence.
//!
//! Every run writes into `<output_dir>/<run_id>/`: `meta.json` (always, also
//! on failure), `trace.csv` for flow runs, snapshots under `snapshots/` and
//! SVG renderings.

mod render;
mod snapshot;
mod trace;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use render::{k_color, render_svg, svg_string, K_CEIL, K_FLOOR};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_HEADER};
pub use trace::{energy_csv_row, read_trace, TraceWriter, ENERGY_HEADER};

use crate::deformation::{energies, DiffeoMap, EnergyReport};
use crate::density::{Densities, SurfaceSpec};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowEngine, FlowStatus};
use crate::grid::DomainSpec;
use crate::moser::{build_initial_map, setup, Setup};
use crate::testmaps::random_feasible;

/// Contents of a run configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: DomainSpec,
    pub target: DomainSpec,
    /// Surface over the source domain (density η); flat when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_surface: Option<SurfaceSpec>,
    /// Surface over the target domain (density μ); flat when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_surface: Option<SurfaceSpec>,
    /// Grid resolution.
    pub n: usize,
    #[serde(flatten)]
    pub flow: FlowConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Subdirectory of `output_dir`; defaults to `n<n>-seed<seed>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    /// Accepted steps between map snapshots; 0 keeps only the first and last.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub seed: u64,
    /// Starts from a seeded random area-preserving map instead of the Moser
    /// initializer; needs identical disk source and target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_amplitude: Option<f64>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl RunConfig {
    /// Minimal configuration for a flat problem with default flow settings.
    pub fn new(source: DomainSpec, target: DomainSpec, n: usize) -> Self {
        RunConfig {
            source,
            target,
            source_surface: None,
            target_surface: None,
            n,
            flow: FlowConfig::default(),
            output_dir: default_output_dir(),
            run_id: None,
            snapshot_every: 0,
            seed: 0,
            random_amplitude: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::BadConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::BadConfig(format!("n must be at least 8, got {}", self.n)));
        }
        self.flow.validate()?;
        for (name, tol) in [("tol_interior", self.flow.tol_interior), ("tol_boundary", self.flow.tol_boundary)] {
            if let Some(t) = tol {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::BadConfig(format!("{name} must be positive, got {t}")));
                }
            }
        }
        if let Some(a) = self.random_amplitude {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::BadConfig(format!("random_amplitude must be positive, got {a}")));
            }
            if self.source != self.target || !matches!(self.source, DomainSpec::Disk { .. }) {
                return Err(Error::BadConfig("random_amplitude needs identical disk source and target".to_string()));
            }
        }
        Ok(())
    }

    pub fn run_dir(&self) -> PathBuf {
        let id = self.run_id.clone().unwrap_or_else(|| format!("n{}-seed{}", self.n, self.seed));
        self.output_dir.join(id)
    }

    /// Charts and densities, with the equal-mass check.
    pub fn setup(&self) -> Result<Setup> {
        setup(&self.source, &self.target, self.source_surface.as_ref(), self.target_surface.as_ref(), self.n)
    }

    /// Starting map: seeded random when requested, otherwise the Moser
    /// initializer.
    pub fn initial_map(&self, setup: &Setup) -> Result<DiffeoMap<f64>> {
        match self.random_amplitude {
            Some(a) => {
                let phi = random_feasible(setup.source.clone(), self.seed, a, self.flow.moser_tol)?;
                DiffeoMap::new(setup.source.clone(), setup.target.clone(), phi.values().clone())
            }
            None => build_initial_map(setup, self.flow.moser_tol),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Initial map written, no flow run.
    Initialized,
    Converged,
    MaxSteps,
    /// Line search found no decrease before the residual tolerances were met.
    Stalled,
    Failed,
}

impl From<FlowStatus> for RunStatus {
    fn from(s: FlowStatus) -> Self {
        match s {
            FlowStatus::Converged => RunStatus::Converged,
            FlowStatus::MaxSteps => RunStatus::MaxSteps,
            FlowStatus::Stalled => RunStatus::Stalled,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Inputs violate a precondition (area mismatch, bad domain, bad file).
    Precondition,
    /// The numerics failed.
    Solver,
}

/// Contents of `meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_energy: Option<EnergyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_res: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_res: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_interior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_boundary: Option<f64>,
    /// Final k_integral: the distance estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Files written by the run, relative to the run directory.
    pub files: Vec<String>,
}

/// What a run left on disk.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub meta: Meta,
    pub trace_path: Option<PathBuf>,
    pub snapshot_paths: Vec<PathBuf>,
    pub render_paths: Vec<PathBuf>,
    pub distance: Option<f64>,
}

impl RunArtifacts {
    pub fn meta_path(&self) -> PathBuf {
        self.run_dir.join(META_FILE)
    }
}

pub const META_FILE: &str = "meta.json";
pub const TRACE_FILE: &str = "trace.csv";
const SNAPSHOT_DIR: &str = "snapshots";

pub fn read_meta(path: &Path) -> Result<Meta> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))
}

fn write_meta(dir: &Path, meta: &Meta) -> Result<()> {
    snapshot::write_atomic(&dir.join(META_FILE), serde_json::to_string_pretty(meta)?.as_bytes())
}

/// Run in progress: collects paths and metadata, and writes `meta.json` at
/// the end whatever the outcome.
struct Run {
    artifacts: RunArtifacts,
}

impl Run {
    fn new(config: &RunConfig, command: &str) -> Self {
        let meta = Meta {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            status: RunStatus::Failed,
            failure: None,
            error: None,
            accepted_steps: 0,
            rejected_steps: 0,
            final_energy: None,
            interior_res: None,
            boundary_res: None,
            tol_interior: None,
            tol_boundary: None,
            distance: None,
            files: Vec::new(),
        };
        let artifacts = RunArtifacts {
            run_dir: config.run_dir(),
            meta,
            trace_path: None,
            snapshot_paths: Vec::new(),
            render_paths: Vec::new(),
            distance: None,
        };
        Run { artifacts }
    }

    fn dir(&self) -> &Path {
        &self.artifacts.run_dir
    }

    fn snapshot(&mut self, phi: &DiffeoMap<f64>, name: &str) -> Result<()> {
        let path = self.dir().join(SNAPSHOT_DIR).join(name);
        write_snapshot(phi, &path)?;
        self.artifacts.snapshot_paths.push(path);
        Ok(())
    }

    fn render(&mut self, phi: &DiffeoMap<f64>, name: &str) -> Result<()> {
        let path = self.dir().join(name);
        render_svg(phi, &path)?;
        self.artifacts.render_paths.push(path);
        Ok(())
    }

    /// Runs `body`, then records the outcome in `meta.json`.
    fn execute(mut self, body: impl FnOnce(&mut Run) -> Result<()>) -> Result<RunArtifacts> {
        fs::create_dir_all(self.dir().join(SNAPSHOT_DIR))?;
        let result = body(&mut self);
        let a = &mut self.artifacts;
        if let Err(e) = &result {
            a.meta.status = RunStatus::Failed;
            a.meta.error = Some(e.to_string());
            a.meta.failure = Some(if e.is_precondition() { FailureKind::Precondition } else { FailureKind::Solver });
        }
        let mut files: Vec<&PathBuf> = a.trace_path.iter().collect();
        files.extend(&a.snapshot_paths);
        files.extend(&a.render_paths);
        a.meta.files = files
            .into_iter()
            .filter(|p| p.exists())
            .map(|p| p.strip_prefix(&a.run_dir).unwrap_or(p).to_string_lossy().into_owned())
            .collect();
        write_meta(&a.run_dir, &a.meta)?;
        result.map(|()| self.artifacts)
    }
}

fn energy_with(phi: &DiffeoMap<f64>, densities: &Densities<f64>) -> Result<EnergyReport> {
    let mu = densities.mu_pullback(phi)?;
    Ok(energies(phi, mu.as_ref(), densities.eta_field()))
}

/// Energies of a stored map under the configuration's densities.
pub fn snapshot_energy(config: &RunConfig, snapshot: &Path) -> Result<EnergyReport> {
    let s = config.setup()?;
    let phi = read_snapshot(snapshot, s.source.clone(), s.target.clone())?;
    energy_with(&phi, &s.densities)
}

/// Builds the initial map and stores it with its energies and a rendering.
pub fn run_init(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    Run::new(config, "init").execute(|run| {
        let s = config.setup()?;
        let phi = config.initial_map(&s)?;
        run.snapshot(&phi, "initial.csv")?;
        run.render(&phi, "initial.svg")?;
        let e = energy_with(&phi, &s.densities)?;
        let meta = &mut run.artifacts.meta;
        meta.final_energy = Some(e);
        meta.status = RunStatus::Initialized;
        Ok(())
    })
}

/// Runs the descent flow from the initial map, or from `resume`.
pub fn run_flow_pipeline(config: &RunConfig, resume: Option<&Path>) -> Result<RunArtifacts> {
    flow_command(config, resume, "flow")
}

/// Full pipeline: initial map, flow, final energies. The distance estimate
/// is the final k_integral.
pub fn run_distance_pipeline(config: &RunConfig) -> Result<RunArtifacts> {
    flow_command(config, None, "distance")
}

fn flow_command(config: &RunConfig, resume: Option<&Path>, command: &str) -> Result<RunArtifacts> {
    config.validate()?;
    Run::new(config, command).execute(|run| {
        let s = config.setup()?;
        let initial = match resume {
            Some(path) => read_snapshot(path, s.source.clone(), s.target.clone())?,
            None => config.initial_map(&s)?,
        };
        run.snapshot(&initial, "step_000000.csv")?;
        let trace_path = run.dir().join(TRACE_FILE);
        let mut trace = TraceWriter::create(&trace_path)?;
        run.artifacts.trace_path = Some(trace_path);
        let engine = FlowEngine::new(s.source.clone(), s.densities.clone(), config.flow.clone())?;
        let every = config.snapshot_every;
        let mut pending = Vec::new();
        let outcome = engine.run_with(initial, &mut |row, state| {
            trace.append(row)?;
            if row.accepted && every > 0 && row.step > 0 && row.step % every == 0 {
                let name = format!("step_{:06}.csv", row.step);
                write_snapshot(&state.phi, &run_path(&config.run_dir(), &name))?;
                pending.push(name);
            }
            Ok(())
        });
        for name in pending {
            run.artifacts.snapshot_paths.push(run_path(run.dir(), &name));
        }
        let outcome = outcome?;
        run.snapshot(&outcome.phi, "final.csv")?;
        run.render(&outcome.phi, "final.svg")?;
        let last = outcome.trace.accepted().last().copied().expect("the initial row is always accepted");
        let meta = &mut run.artifacts.meta;
        meta.status = outcome.status.into();
        meta.accepted_steps = outcome.trace.accepted_steps();
        meta.rejected_steps = outcome.trace.rows.iter().filter(|r| !r.accepted).count();
        meta.final_energy = Some(EnergyReport {
            e_dirichlet: last.e_dirichlet,
            e_quad: last.e_quad,
            k_integral: last.k_integral,
            det_drift: last.det_drift,
        });
        meta.interior_res = Some(last.interior_res);
        meta.boundary_res = Some(last.boundary_res);
        meta.tol_interior = Some(outcome.tol_interior);
        meta.tol_boundary = Some(outcome.tol_boundary);
        meta.distance = Some(last.k_integral);
        run.artifacts.distance = Some(last.k_integral);
        Ok(())
    })
}

fn run_path(dir: &Path, snapshot_name: &str) -> PathBuf {
    dir.join(SNAPSHOT_DIR).join(snapshot_name)
}
