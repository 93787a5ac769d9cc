use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{build_initial_state, ScenarioConfig, ScenarioError};
use crate::diagnostics::{total_population, write_csv_row};
use crate::grid::{pressure_from_density, FieldState};
use crate::solver::{run_observed, write_checkpoint, InvariantLog, RunError, RunOutput};

pub const PROFILE_COLUMNS: [&str; 7] = ["x", "n1", "n2", "n", "c", "p", "u"];
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Tolerated clamped negative mass relative to the total population.
pub const CLAMPED_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ScenarioConfig,
    pub wall_time_seconds: f64,
    pub steps: usize,
    pub final_time: f64,
    pub initial_total_mass: f64,
    pub final_total_mass: f64,
    pub invariants: InvariantLog,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub manifest: Manifest,
    /// `None` when the solver aborted.
    pub output: Option<RunOutput>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, ScenarioError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Writes `x,n1,n2,n,c,p,u` with `u` averaged onto the regular nodes.
pub fn write_profile_csv<W: Write>(mut w: W, state: &FieldState, gamma: f64) -> std::io::Result<()> {
    writeln!(w, "{}", PROFILE_COLUMNS.join(","))?;
    let u = state.u.values();
    let len = state.grid.n_cells();
    for i in 0..len {
        let (a, b) = (state.n1.values()[i], state.n2.values()[i]);
        let n = a + b;
        let u_node = match (i.checked_sub(1).map(|k| u[k]), u.get(i)) {
            (Some(l), Some(r)) => 0.5 * (l + r),
            (Some(l), None) => l,
            (None, Some(r)) => *r,
            (None, None) => 0.0,
        };
        let row = [
            state.grid.x(i),
            a,
            b,
            n,
            state.c.values()[i],
            pressure_from_density(n, gamma),
            u_node,
        ];
        write_csv_row(&mut w, &row)?;
    }
    Ok(())
}

fn profile_file_name(t: f64) -> String {
    format!("profile_t{t:.4}.csv")
}

fn mass(state: &FieldState) -> f64 {
    total_population(state).0
}

/// Runs a scenario and writes its files into `out_dir`. A solver abort is
/// not an `Err`: it yields an `Aborted` manifest and a snapshot checkpoint.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutcome, ScenarioError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let initial = build_initial_state(cfg)?;
    let gamma = cfg.model.gamma;
    let dt = cfg.solver.dt;
    let mut files = Vec::new();

    let mut pending: Vec<f64> = if cfg.outputs.profile_times.is_empty() {
        vec![cfg.t_end]
    } else {
        let mut t = cfg.outputs.profile_times.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    };
    pending.reverse();
    let mut profile_error: Option<ScenarioError> = None;
    let mut emit = |state: &FieldState, pending: &mut Vec<f64>, files: &mut Vec<String>| {
        while let Some(&t) = pending.last() {
            if state.t + 0.5 * dt < t {
                break;
            }
            pending.pop();
            let name = profile_file_name(t);
            let path = out_dir.join(&name);
            let result = create(&path).and_then(|mut w| {
                write_profile_csv(&mut w, state, gamma)
                    .and_then(|_| w.flush())
                    .map_err(io_err(&path))
            });
            match result {
                Ok(()) => files.push(name),
                Err(e) => {
                    profile_error.get_or_insert(e);
                }
            }
        }
    };

    emit(&initial, &mut pending, &mut files);
    let started = Instant::now();
    let result = run_observed(&initial, &cfg.model, &cfg.solver, cfg.t_end, &mut |_, s| {
        emit(s, &mut pending, &mut files)
    });
    let wall_time_seconds = started.elapsed().as_secs_f64();
    if let Some(e) = profile_error {
        return Err(e);
    }

    let (manifest, output) = match result {
        Ok(out) => {
            if cfg.outputs.timeseries {
                let path = out_dir.join(super::output::TIMESERIES_FILE);
                let mut w = create(&path)?;
                out.series.write_csv(&mut w).map_err(io_err(&path))?;
                w.flush().map_err(io_err(&path))?;
                files.insert(0, TIMESERIES_FILE.to_string());
            }
            if cfg.outputs.final_checkpoint {
                let name = "final.chk";
                let path = out_dir.join(name);
                let mut w = create(&path)?;
                write_checkpoint(&mut w, &out.final_state, gamma).map_err(io_err(&path))?;
                w.flush().map_err(io_err(&path))?;
                files.push(name.to_string());
            }
            let manifest = Manifest {
                name: cfg.name.clone(),
                status: RunStatus::Completed,
                error: None,
                config: cfg.clone(),
                wall_time_seconds,
                steps: out.steps,
                final_time: out.final_state.t,
                initial_total_mass: mass(&initial),
                final_total_mass: mass(&out.final_state),
                invariants: out.log.clone(),
                files,
            };
            (manifest, Some(out))
        }
        Err(RunError {
            step,
            t,
            source,
            snapshot,
        }) => {
            log::error!("{}: solver aborted at step {step} (t = {t}): {source}", cfg.name);
            let name = "abort_snapshot.chk";
            let path = out_dir.join(name);
            let mut w = create(&path)?;
            write_checkpoint(&mut w, &snapshot, gamma).map_err(io_err(&path))?;
            w.flush().map_err(io_err(&path))?;
            files.push(name.to_string());
            let manifest = Manifest {
                name: cfg.name.clone(),
                status: RunStatus::Aborted,
                error: Some(format!("step {step} (t = {t}): {source}")),
                config: cfg.clone(),
                wall_time_seconds,
                steps: step.saturating_sub(1),
                final_time: snapshot.t,
                initial_total_mass: mass(&initial),
                final_total_mass: mass(&snapshot),
                invariants: InvariantLog::default(),
                files,
            };
            (manifest, None)
        }
    };

    let path = out_dir.join(MANIFEST_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|source| ScenarioError::Json {
        path: path.display().to_string(),
        source,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(ScenarioOutcome { manifest, output })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub manifest: Manifest,
    pub problems: Vec<String>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-reads a run directory and lists every invariant problem it records.
pub fn check_run_dir(dir: &Path) -> Result<CheckReport, ScenarioError> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|source| ScenarioError::Json {
        path: path.display().to_string(),
        source,
    })?;
    let mut problems = Vec::new();
    if manifest.status != RunStatus::Completed {
        problems.push(format!(
            "run did not complete: {}",
            manifest.error.as_deref().unwrap_or("unknown error")
        ));
    }
    for (kind, count) in &manifest.invariants.counts {
        if kind != "cfl_exceeded" && *count > 0 {
            problems.push(format!("{count} `{kind}` events"));
        }
    }
    let scale = manifest.initial_total_mass.max(manifest.final_total_mass);
    let clamped = manifest.invariants.clamped_density_mass;
    if clamped > CLAMPED_MASS_TOL * scale {
        problems.push(format!(
            "clamped negative mass {clamped:e} exceeds {CLAMPED_MASS_TOL:e} of total mass {scale:e}"
        ));
    }
    for f in &manifest.files {
        if !dir.join(f).is_file() {
            problems.push(format!("missing output file {f}"));
        }
    }
    Ok(CheckReport { manifest, problems })
}
