//! Running scenarios and writing their outputs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use manifold_consensus::consensus::{
    balance_residual, centroid_tangent_residual, cost_pl, is_anti_consensus, is_balanced_config, is_consensus, is_synchronized,
};
use manifold_consensus::dynamics::integrate;
use manifold_consensus::{ManifoldDescriptor, ManifoldPoint, SwarmState, Trajectory, WeightedDigraph};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::{InitSpec, RawScenario, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("initial state: {0}")]
    Init(String),
    #[error("{0}")]
    Core(#[from] manifold_consensus::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Descriptor as written to `final_state.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<usize>,
}

impl From<ManifoldDescriptor> for DescriptorJson {
    fn from(d: ManifoldDescriptor) -> Self {
        match d {
            ManifoldDescriptor::Circle => Self { kind: "circle".into(), n: None, p: None },
            ManifoldDescriptor::SpecialOrthogonal { n } => Self { kind: "so".into(), n: Some(n), p: None },
            ManifoldDescriptor::Grassmann { p, n } => Self { kind: "grassmann".into(), n: Some(n), p: Some(p) },
        }
    }
}

impl DescriptorJson {
    pub fn descriptor(&self) -> Result<ManifoldDescriptor, String> {
        match (self.kind.as_str(), self.n, self.p) {
            ("circle", None, None) => Ok(ManifoldDescriptor::Circle),
            ("so", Some(n), None) => ManifoldDescriptor::special_orthogonal(n).map_err(|e| e.to_string()),
            ("grassmann", Some(n), Some(p)) => ManifoldDescriptor::grassmann(p, n).map_err(|e| e.to_string()),
            _ => Err(format!("bad descriptor {self:?}")),
        }
    }
}

/// Contents of `final_state.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub descriptor: DescriptorJson,
    pub time: f64,
    pub seed: u64,
    /// Row-major embeddings.
    pub positions: Vec<Vec<f64>>,
    #[serde(default)]
    pub estimators: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub scenario: Option<RawScenario>,
}

impl StateFile {
    pub fn from_state(state: &SwarmState<f64>, time: f64, seed: u64, scenario: Option<RawScenario>) -> Self {
        Self {
            descriptor: state.descriptor().into(),
            time,
            seed,
            positions: state.positions().iter().map(|p| p.embed()).collect(),
            estimators: state.estimators().map(|xs| xs.iter().map(flatten).collect()),
            scenario,
        }
    }

    pub fn read(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| RunError::Init(format!("{}: {e}", path.display())))
    }

    pub fn to_state(&self) -> Result<SwarmState<f64>, RunError> {
        let d = self.descriptor.descriptor().map_err(RunError::Init)?;
        let positions = self
            .positions
            .iter()
            .map(|f| ManifoldPoint::from_flat(d, f))
            .collect::<Result<Vec<_>, _>>()?;
        let mut s = SwarmState::new(positions)?;
        if let Some(xs) = &self.estimators {
            let xs = xs.iter().map(|f| d.ambient_from_flat(f)).collect::<Result<Vec<_>, _>>()?;
            s = s.with_estimators(xs)?;
        }
        Ok(s)
    }
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Initial swarm of a scenario.
pub fn initial_state(sc: &Scenario) -> Result<SwarmState<f64>, RunError> {
    let d = sc.descriptor;
    let mut state = match &sc.init {
        InitSpec::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            SwarmState::new((0..sc.n_agents).map(|_| d.random_point(&mut rng)).collect())?
        }
        InitSpec::Ring { chi, offset, jitter, seed } => {
            let angles = sc.ring_angles(*chi, *offset, *jitter, *seed);
            SwarmState::new(angles.into_iter().map(ManifoldPoint::from_angle).collect())?
        }
        InitSpec::Explicit { matrices } => SwarmState::new(
            matrices.iter().map(|f| ManifoldPoint::from_flat(d, f)).collect::<Result<Vec<_>, _>>()?,
        )?,
        InitSpec::StateFile { path } => {
            let file = StateFile::read(path)?;
            let s = file.to_state()?;
            if s.descriptor() != d {
                return Err(RunError::Init(format!(
                    "{} holds {} points but manifold is {d}",
                    path.display(),
                    s.descriptor()
                )));
            }
            if s.n_agents() != sc.n_agents {
                return Err(RunError::Init(format!(
                    "{} holds {} agents but agents.count = {}",
                    path.display(),
                    s.n_agents(),
                    sc.n_agents
                )));
            }
            s
        }
    };
    if let Some(xs) = &sc.estimators {
        let xs = xs.iter().map(|f| d.ambient_from_flat(f)).collect::<Result<Vec<_>, _>>()?;
        state = state.without_estimators().with_estimators(xs)?;
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortJson {
    pub time: f64,
    pub step: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsJson {
    #[serde(rename = "P_L")]
    pub p_l: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub sync_error: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub centroid_norm: f64,
    pub manifold_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicates {
    pub synchronized: bool,
    pub consensus: bool,
    pub anti_consensus: bool,
    pub balanced: bool,
    pub balance_residual: f64,
    /// Largest `‖Proj_k(C_e)‖`; zero at critical points of `P`.
    pub tangent_residual: f64,
}

/// Turning points of the P_L trace measured against one fixed graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    /// `"active"` or `"segment <i>"`.
    pub reference: String,
    pub extrema: usize,
    /// Largest swing between consecutive turning points.
    pub amplitude: f64,
    /// Smallest swing among the last ten turning points.
    pub late_amplitude: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub manifold: String,
    pub flow: String,
    pub seed: u64,
    pub status: String,
    pub abort: Option<AbortJson>,
    pub steps: usize,
    pub logged: usize,
    pub final_time: f64,
    pub final_metrics: MetricsJson,
    pub max_manifold_drift: f64,
    pub predicates: Predicates,
    pub pl_oscillation: Oscillation,
}

pub struct Outcome {
    pub trajectory: Trajectory<f64>,
    pub summary: Summary,
}

impl Outcome {
    /// 0 when the run completed, 2 when it aborted.
    pub fn exit_code(&self) -> i32 {
        if self.trajectory.abort.is_some() {
            2
        } else {
            0
        }
    }
}

/// Integrates a scenario.
pub fn run(sc: &Scenario) -> Result<Outcome, RunError> {
    let init = initial_state(sc)?;
    let traj = integrate(&sc.flow, &sc.schedule, &init, &sc.config)?;
    let summary = summarize(sc, &traj)?;
    Ok(Outcome { trajectory: traj, summary })
}

fn summarize(sc: &Scenario, traj: &Trajectory<f64>) -> Result<Summary, RunError> {
    let state = traj.final_state();
    let t = traj.final_time();
    let m = traj.metrics.last().expect("trajectory has at least one sample");
    let g = active_graph(sc, t);
    let tol = &sc.tolerances;
    let predicates = Predicates {
        synchronized: is_synchronized(state, tol.sync),
        consensus: is_consensus(g, state, tol.predicate)?,
        anti_consensus: is_anti_consensus(g, state, tol.predicate)?,
        balanced: is_balanced_config(state, tol.balance),
        balance_residual: balance_residual(state),
        tangent_residual: centroid_tangent_residual(state),
    };
    let (reference, series) = match sc.reference_segment {
        Some(i) => {
            let g = &sc.schedule.segments()[i].graph;
            let s = traj.states.iter().map(|s| cost_pl(g, s)).collect::<Result<Vec<_>, _>>()?;
            (format!("segment {i}"), s)
        }
        None => ("active".to_string(), traj.metrics.iter().map(|m| m.p_l).collect()),
    };
    let turns = turning_points(&series, tol.oscillation);
    let swings: Vec<f64> = turns.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let late = &swings[swings.len().saturating_sub(10)..];
    let pl_oscillation = Oscillation {
        reference,
        extrema: turns.len(),
        amplitude: swings.iter().copied().fold(0.0, f64::max),
        late_amplitude: if late.is_empty() { 0.0 } else { late.iter().copied().fold(f64::INFINITY, f64::min) },
        min: series.iter().copied().fold(f64::INFINITY, f64::min),
        max: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(Summary {
        name: sc.raw.name.clone(),
        manifold: sc.descriptor.to_string(),
        flow: sc.flow.name().to_string(),
        seed: sc.raw.seed,
        status: if traj.abort.is_some() { "aborted" } else { "completed" }.into(),
        abort: traj.abort.as_ref().map(|a| AbortJson { time: a.time, step: a.step, reason: a.reason.clone() }),
        steps: traj.steps_taken,
        logged: traj.len(),
        final_time: t,
        final_metrics: MetricsJson {
            p_l: m.p_l,
            p: m.p,
            sync_error: m.sync_error,
            w: m.w,
            centroid_norm: m.centroid_norm,
            manifold_drift: m.manifold_drift,
        },
        max_manifold_drift: traj.max_drift(),
        predicates,
        pl_oscillation,
    })
}

/// Graph in force at `t`, falling back to the last segment past the end.
fn active_graph(sc: &Scenario, t: f64) -> &WeightedDigraph<f64> {
    sc.schedule
        .graph_at(t)
        .unwrap_or_else(|_| &sc.schedule.segments().last().expect("schedule has segments").graph)
}

/// Values at the turning points of `xs`, ignoring reversals smaller than
/// `threshold`. The first sample counts as a turning point.
pub fn turning_points(xs: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let Some(&first) = xs.first() else {
        return out;
    };
    out.push(first);
    // +1 rising, -1 falling, 0 undecided
    let mut dir = 0i8;
    let mut ext = first;
    for &x in &xs[1..] {
        match dir {
            0 => {
                if x - ext > threshold {
                    dir = 1;
                    ext = x;
                } else if ext - x > threshold {
                    dir = -1;
                    ext = x;
                }
            }
            1 => {
                if x > ext {
                    ext = x;
                } else if ext - x > threshold {
                    out.push(ext);
                    dir = -1;
                    ext = x;
                }
            }
            _ => {
                if x < ext {
                    ext = x;
                } else if x - ext > threshold {
                    out.push(ext);
                    dir = 1;
                    ext = x;
                }
            }
        }
    }
    out
}

/// `metrics.csv` contents.
pub fn metrics_csv(traj: &Trajectory<f64>) -> String {
    let mut s = String::from("t,P_L,P,sync_error,W,centroid_norm,manifold_drift\n");
    for (t, m) in traj.times.iter().zip(&traj.metrics) {
        writeln!(s, "{t},{},{},{},{},{},{}", m.p_l, m.p, m.sync_error, m.w, m.centroid_norm, m.manifold_drift)
            .expect("write to string");
    }
    s
}

/// Writes `metrics.csv`, `final_state.json` and `summary.json` into `dir`.
pub fn write_outputs(sc: &Scenario, out: &Outcome, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, contents: String| {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
    };
    write("metrics.csv", metrics_csv(&out.trajectory))?;
    let state = StateFile::from_state(
        out.trajectory.final_state(),
        out.trajectory.final_time(),
        sc.raw.seed,
        Some(sc.raw.clone()),
    );
    write("final_state.json", serde_json::to_string_pretty(&state).expect("state serializes") + "\n")?;
    write("summary.json", serde_json::to_string_pretty(&out.summary).expect("summary serializes") + "\n")?;
    Ok(())
}
