//! Scenario runner for `manifold-consensus`.
//!
//! A scenario is a TOML file naming a manifold, an initial swarm, a graph or
//! graph schedule, a flow and integrator settings. Running it writes
//! `metrics.csv`, `final_state.json` and `summary.json`.

pub mod presets;
pub mod run;
pub mod scenario;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use run::{run, write_outputs, Outcome, RunError, StateFile, Summary};
pub use scenario::{parse_scenario, parse_with_overrides, Overrides, Scenario, ScenarioError};

/// A scenario to run: its text and the directory relative paths resolve in.
#[derive(Clone, Debug)]
pub struct Job {
    pub label: String,
    pub text: String,
    pub base_dir: PathBuf,
}

impl Job {
    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
        let label = path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { label, text, base_dir })
    }

    pub fn preset(name: &str) -> Option<Self> {
        presets::preset(name).map(|t| Self { label: name.into(), text: t.into(), base_dir: PathBuf::from(".") })
    }
}

/// Result of one job: the exit code and a one-line report.
#[derive(Clone, Debug)]
pub struct JobReport {
    pub label: String,
    pub code: i32,
    pub message: String,
}

/// Parses, runs and writes one job into `out_dir`.
pub fn execute(job: &Job, overrides: &Overrides, out_dir: &Path) -> JobReport {
    let result = parse_with_overrides(&job.text, &job.base_dir, overrides)
        .map_err(RunError::from)
        .and_then(|sc| {
            let out = run(&sc)?;
            write_outputs(&sc, &out, out_dir)?;
            Ok(out)
        });
    match result {
        Ok(out) => {
            let s = &out.summary;
            let message = match &s.abort {
                Some(a) => format!("aborted at t = {} (step {}): {}", a.time, a.step, a.reason),
                None => format!(
                    "completed t = {} sync_error = {:e} P_L = {:e}",
                    s.final_time, s.final_metrics.sync_error, s.final_metrics.p_l
                ),
            };
            JobReport { label: job.label.clone(), code: out.exit_code(), message }
        }
        Err(e) => JobReport { label: job.label.clone(), code: e.exit_code(), message: e.to_string() },
    }
}

/// Runs several jobs on `jobs` threads, each in `out_root/<label>`.
/// Reports come back in input order.
pub fn execute_all(list: &[Job], overrides: &Overrides, out_root: &Path, jobs: usize) -> Vec<JobReport> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| list.par_iter().map(|j| execute(j, overrides, &out_root.join(&j.label))).collect())
}
