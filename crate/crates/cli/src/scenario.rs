//! Scenario files: TOML documents describing one experiment.
//!
//! ```toml
//! name = "kuramoto_sync"
//! seed = 1
//!
//! [manifold]
//! kind = "circle"            # circle | so | grassmann (with n, p)
//!
//! [agents]
//! count = 10
//! init = "random"            # random | ring | explicit | state_file
//!
//! [graph]
//! kind = "complete"          # complete | ring | directed_cycle | random | edges | explicit
//!
//! [flow]
//! kind = "gradient"
//! alpha = 1.0
//!
//! [integrator]
//! step = 0.01
//! t_end = 20.0
//! ```
//!
//! A `[schedule]` table with `[[schedule.segments]]` (or `[schedule.random]`)
//! replaces `[graph]` for time-varying graphs.

use std::fmt;
use std::path::{Path, PathBuf};

use manifold_consensus::graph::{GraphSchedule, Segment, WeightedDigraph};
use manifold_consensus::manifolds::ManifoldDescriptor;
use manifold_consensus::{FlowSpec, GrassmannRepresentation, IntegratorConfig, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One problem found while reading a scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Every problem found in a scenario, in document order where known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub manifold: RawManifold,
    pub agents: RawAgents,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<RawGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<RawSchedule>,
    pub flow: RawFlow,
    pub integrator: RawIntegrator,
    #[serde(default)]
    pub tolerances: RawTolerances,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawManifold {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAgents {
    pub count: usize,
    #[serde(default = "default_init")]
    pub init: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    /// Uniform angle noise in `[-jitter, jitter]` added to ring states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    /// Row-major embeddings, one per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn default_init() -> String {
    "random".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGraph {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
    /// Directed edges `[from, to]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    /// Adds the reverse of every listed edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undirected: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSchedule {
    #[serde(default = "default_true")]
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<RawSegment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RawRandomSwitching>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSegment {
    pub start: f64,
    pub graph: RawGraph,
}

/// `count` consecutive segments of length `dwell`, each drawn uniformly from
/// `pool` or, without a pool, a fresh Bernoulli(`p`) digraph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRandomSwitching {
    pub dwell: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<Vec<RawGraph>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFlow {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    pub step: f64,
    pub t_end: f64,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_stride")]
    pub log_stride: usize,
    #[serde(default = "default_repr")]
    pub grassmann_representation: String,
}

fn default_method() -> String {
    "rk4".into()
}

fn default_stride() -> usize {
    1
}

fn default_repr() -> String {
    "basis".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTolerances {
    #[serde(default = "default_tol")]
    pub sync: f64,
    #[serde(default = "default_tol")]
    pub predicate: f64,
    #[serde(default = "default_tol")]
    pub balance: f64,
    /// Minimal swing counted as an oscillation of P_L.
    #[serde(default = "default_oscillation")]
    pub oscillation: f64,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_oscillation() -> f64 {
    1e-3
}

impl Default for RawTolerances {
    fn default() -> Self {
        Self { sync: default_tol(), predicate: default_tol(), balance: default_tol(), oscillation: default_oscillation() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    /// Segment whose graph is used for the P_L oscillation statistics;
    /// the active graph is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_segment: Option<usize>,
}

/// How the initial positions are produced.
#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Random { seed: u64 },
    Ring { chi: f64, offset: f64, jitter: f64, seed: u64 },
    Explicit { matrices: Vec<Vec<f64>> },
    StateFile { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub sync: f64,
    pub predicate: f64,
    pub balance: f64,
    pub oscillation: f64,
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub raw: RawScenario,
    pub descriptor: ManifoldDescriptor,
    pub n_agents: usize,
    pub init: InitSpec,
    pub estimators: Option<Vec<Vec<f64>>>,
    pub schedule: GraphSchedule<f64>,
    pub flow: FlowSpec<f64>,
    pub config: IntegratorConfig<f64>,
    pub tolerances: Tolerances,
    pub reference_segment: Option<usize>,
}

/// Command-line overrides applied before validation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub log_stride: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawScenario) {
        if let Some(s) = self.seed {
            raw.seed = s;
        }
        if let Some(h) = self.step {
            raw.integrator.step = h;
        }
        if let Some(l) = self.log_stride {
            raw.integrator.log_stride = l;
        }
    }
}

/// Parses and validates scenario text. Relative state-file paths resolve
/// against `base_dir`.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    parse_with_overrides(text, base_dir, &Overrides::default())
}

pub fn parse_with_overrides(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Scenario, ScenarioError> {
    let mut raw = parse_raw(text)?;
    overrides.apply(&mut raw);
    build(raw, Some(text), base_dir)
}

/// Syntax and schema check only.
pub fn parse_raw(text: &str) -> Result<RawScenario, ScenarioError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        ScenarioError { issues: vec![Issue { line, message: e.message().trim().to_string() }] }
    })
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside the table `table` (the first match), if present.
fn find_line(text: Option<&str>, table: &str, key: &str) -> Option<usize> {
    let text = text?;
    let mut current = String::new();
    let mut table_line = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table && table_line.is_none() {
                table_line = Some(i + 1);
            }
            continue;
        }
        if current == table {
            if key.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    if table.is_empty() {
        return None;
    }
    table_line
}

struct Collector<'a> {
    text: Option<&'a str>,
    issues: Vec<Issue>,
}

impl Collector<'_> {
    fn push(&mut self, table: &str, key: &str, message: impl Into<String>) {
        self.issues.push(Issue { line: find_line(self.text, table, key), message: message.into() });
    }
}

/// Validates a parsed scenario. `text` is only used for line references.
pub fn build(raw: RawScenario, text: Option<&str>, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let mut c = Collector { text, issues: Vec::new() };

    let descriptor = match manifold_descriptor(&raw.manifold) {
        Ok(d) => Some(d),
        Err(m) => {
            c.push("manifold", "kind", m);
            None
        }
    };

    let n_agents = raw.agents.count;
    if n_agents == 0 {
        c.push("agents", "count", "agents.count must be at least 1");
    }
    let agent_seed = raw.agents.seed.unwrap_or(raw.seed);
    let init = match raw.agents.init.as_str() {
        "random" => Some(InitSpec::Random { seed: agent_seed }),
        "ring" => {
            if descriptor.is_some() && descriptor != Some(ManifoldDescriptor::Circle) {
                c.push("agents", "init", "agents.init = \"ring\" needs manifold.kind = \"circle\"");
            }
            match raw.agents.chi {
                Some(chi) => Some(InitSpec::Ring {
                    chi,
                    offset: raw.agents.offset.unwrap_or(0.0),
                    jitter: raw.agents.jitter.unwrap_or(0.0),
                    seed: agent_seed,
                }),
                None => {
                    c.push("agents", "init", "agents.init = \"ring\" needs agents.chi");
                    None
                }
            }
        }
        "explicit" => explicit_matrices(&raw.agents, descriptor, &mut c),
        "state_file" => match &raw.agents.path {
            Some(p) => Some(InitSpec::StateFile { path: base_dir.join(p) }),
            None => {
                c.push("agents", "init", "agents.init = \"state_file\" needs agents.path");
                None
            }
        },
        other => {
            c.push("agents", "init", format!("unknown agents.init \"{other}\" (random | ring | explicit | state_file)"));
            None
        }
    };

    if let (Some(d), Some(xs)) = (descriptor, &raw.agents.estimators) {
        if xs.len() != n_agents {
            c.push(
                "agents",
                "estimators",
                format!("agents.estimators has {} entries but agents.count = {n_agents}", xs.len()),
            );
        }
        let m = d.embedding_dim();
        if let Some((k, x)) = xs.iter().enumerate().find(|(_, x)| x.len() != m) {
            c.push(
                "agents",
                "estimators",
                format!("agents.estimators[{k}] has {} entries but {d} needs {m}", x.len()),
            );
        }
    }

    let schedule = match (&raw.graph, &raw.schedule) {
        (Some(_), Some(_)) => {
            c.push("schedule", "", "give either [graph] or [schedule], not both");
            None
        }
        (None, None) => {
            c.push("", "", "a [graph] or [schedule] table is required");
            None
        }
        (Some(g), None) => build_graph(g, n_agents, raw.seed, "graph", &mut c).map(GraphSchedule::constant),
        (None, Some(s)) => build_schedule(s, n_agents, raw.seed, &mut c),
    };

    let flow = build_flow(&raw.flow, &mut c);
    if let (Some(f), Some(d)) = (&flow, descriptor) {
        if let Err(e) = f.validate(d) {
            let key = match e.to_string() {
                s if s.contains("gamma_b") => "gamma_b",
                s if s.contains("gamma_s") => "gamma_s",
                s if s.contains("beta") => "beta",
                s if s.contains("alpha") => "alpha",
                _ => "kind",
            };
            c.push("flow", key, format!("flow: {e}"));
        }
    }

    let config = build_integrator(&raw.integrator, raw.seed, &mut c);

    let t = &raw.tolerances;
    for (key, v) in [("sync", t.sync), ("predicate", t.predicate), ("balance", t.balance), ("oscillation", t.oscillation)] {
        if !(v >= 0.0) || !v.is_finite() {
            c.push("tolerances", key, format!("tolerances.{key} must be a nonnegative number"));
        }
    }
    let tolerances = Tolerances { sync: t.sync, predicate: t.predicate, balance: t.balance, oscillation: t.oscillation };

    let reference_segment = raw.output.reference_segment;
    if let (Some(r), Some(s)) = (reference_segment, &schedule) {
        if r >= s.segments().len() {
            c.push(
                "output",
                "reference_segment",
                format!("output.reference_segment = {r} but the schedule has {} segments", s.segments().len()),
            );
        }
    }

    if !c.issues.is_empty() {
        return Err(ScenarioError { issues: c.issues });
    }
    Ok(Scenario {
        descriptor: descriptor.expect("checked"),
        n_agents,
        init: init.expect("checked"),
        estimators: raw.agents.estimators.clone(),
        schedule: schedule.expect("checked"),
        flow: flow.expect("checked"),
        config: config.expect("checked"),
        tolerances,
        reference_segment,
        raw,
    })
}

fn manifold_descriptor(m: &RawManifold) -> Result<ManifoldDescriptor, String> {
    match m.kind.as_str() {
        "circle" => {
            if m.n.is_some() || m.p.is_some() {
                return Err("manifold.kind = \"circle\" takes no n or p".into());
            }
            Ok(ManifoldDescriptor::Circle)
        }
        "so" => {
            if m.p.is_some() {
                return Err("manifold.kind = \"so\" takes no p".into());
            }
            let n = m.n.ok_or("manifold.kind = \"so\" needs manifold.n")?;
            ManifoldDescriptor::special_orthogonal(n).map_err(|e| e.to_string())
        }
        "grassmann" => {
            let n = m.n.ok_or("manifold.kind = \"grassmann\" needs manifold.n")?;
            let p = m.p.ok_or("manifold.kind = \"grassmann\" needs manifold.p")?;
            ManifoldDescriptor::grassmann(p, n).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown manifold.kind \"{other}\" (circle | so | grassmann)")),
    }
}

fn explicit_matrices(a: &RawAgents, d: Option<ManifoldDescriptor>, c: &mut Collector<'_>) -> Option<InitSpec> {
    let matrices = match (&a.angles, &a.matrices) {
        (Some(_), Some(_)) => {
            c.push("agents", "angles", "give either agents.angles or agents.matrices, not both");
            return None;
        }
        (Some(angles), None) => {
            if d.is_some() && d != Some(ManifoldDescriptor::Circle) {
                c.push("agents", "angles", "agents.angles needs manifold.kind = \"circle\"");
                return None;
            }
            angles.iter().map(|t| vec![t.cos(), t.sin()]).collect::<Vec<_>>()
        }
        (None, Some(m)) => m.clone(),
        (None, None) => {
            c.push("agents", "init", "agents.init = \"explicit\" needs agents.angles or agents.matrices");
            return None;
        }
    };
    let key = if a.angles.is_some() { "angles" } else { "matrices" };
    if matrices.len() != a.count {
        c.push(
            "agents",
            key,
            format!("agents.count = {} but agents.{key} has {} entries", a.count, matrices.len()),
        );
        return None;
    }
    if let Some(d) = d {
        for (k, m) in matrices.iter().enumerate() {
            if let Err(e) = manifold_consensus::manifolds::ManifoldPoint::from_flat(d, m) {
                c.push("agents", key, format!("agents.{key}[{k}]: {e}"));
                return None;
            }
        }
    }
    Some(InitSpec::Explicit { matrices })
}

fn build_graph(g: &RawGraph, n: usize, seed: u64, table: &str, c: &mut Collector<'_>) -> Option<WeightedDigraph<f64>> {
    let w = g.weight.unwrap_or(1.0);
    if !(w > 0.0) || !w.is_finite() {
        c.push(table, "weight", format!("{table}.weight must be positive, got {w}"));
        return None;
    }
    let result = match g.kind.as_str() {
        "complete" => WeightedDigraph::complete(n, w),
        "ring" => WeightedDigraph::ring_undirected(n, w),
        "directed_cycle" => WeightedDigraph::directed_cycle(n, w),
        "random" => {
            let p = match g.p {
                Some(p) => p,
                None => {
                    c.push(table, "kind", format!("{table}.kind = \"random\" needs {table}.p"));
                    return None;
                }
            };
            WeightedDigraph::<f64>::random_digraph(n, p, g.seed.unwrap_or(seed)).map(|r| r.map_weights(|x: f64| x * w))
        }
        "edges" => {
            let Some(edges) = &g.edges else {
                c.push(table, "kind", format!("{table}.kind = \"edges\" needs {table}.edges"));
                return None;
            };
            let mut rows = vec![vec![0.0; n]; n];
            for &[j, k] in edges {
                if j >= n || k >= n {
                    c.push(
                        table,
                        "edges",
                        format!("{table}.edges contains [{j}, {k}] but agents.count = {n}"),
                    );
                    return None;
                }
                rows[j][k] = w;
                if g.undirected.unwrap_or(false) {
                    rows[k][j] = w;
                }
            }
            WeightedDigraph::from_rows(&rows)
        }
        "explicit" => {
            let Some(adj) = &g.adjacency else {
                c.push(table, "kind", format!("{table}.kind = \"explicit\" needs {table}.adjacency"));
                return None;
            };
            if adj.len() != n || adj.iter().any(|r| r.len() != n) {
                let cols = adj.first().map_or(0, |r| r.len());
                c.push(
                    table,
                    "adjacency",
                    format!("{table}.adjacency is {}×{cols} but agents.count = {n}", adj.len()),
                );
                return None;
            }
            WeightedDigraph::from_rows(adj)
        }
        other => {
            c.push(
                table,
                "kind",
                format!("unknown {table}.kind \"{other}\" (complete | ring | directed_cycle | random | edges | explicit)"),
            );
            return None;
        }
    };
    match result {
        Ok(g) => Some(g),
        Err(e) => {
            c.push(table, "kind", format!("{table}: {e}"));
            None
        }
    }
}

fn build_schedule(s: &RawSchedule, n: usize, seed: u64, c: &mut Collector<'_>) -> Option<GraphSchedule<f64>> {
    let mut segments = Vec::new();
    let mut end = s.end;
    match (&s.segments, &s.random) {
        (Some(_), Some(_)) => {
            c.push("schedule", "", "give either schedule.segments or schedule.random, not both");
            return None;
        }
        (None, None) => {
            c.push("schedule", "", "[schedule] needs segments or a [schedule.random] table");
            return None;
        }
        (Some(segs), None) => {
            for (i, seg) in segs.iter().enumerate() {
                let g = build_graph(&seg.graph, n, seed.wrapping_add(i as u64), "schedule.segments.graph", c)?;
                segments.push(Segment { start: seg.start, graph: g });
            }
        }
        (None, Some(r)) => {
            if !(r.dwell > 0.0) || r.count == 0 {
                c.push("schedule.random", "dwell", "schedule.random needs dwell > 0 and count >= 1");
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed.unwrap_or(seed));
            let pool = match &r.pool {
                Some(p) if !p.is_empty() => Some(
                    p.iter()
                        .map(|g| build_graph(g, n, seed, "schedule.random.pool", c))
                        .collect::<Option<Vec<_>>>()?,
                ),
                Some(_) => {
                    c.push("schedule.random", "pool", "schedule.random.pool is empty");
                    return None;
                }
                None => None,
            };
            let prob = r.p.unwrap_or(0.5);
            for i in 0..r.count {
                let g = match &pool {
                    Some(pool) => pool[rng.random_range(0..pool.len())].clone(),
                    None => match WeightedDigraph::random_digraph_with(n, prob, &mut rng) {
                        Ok(g) => g,
                        Err(e) => {
                            c.push("schedule.random", "p", format!("schedule.random: {e}"));
                            return None;
                        }
                    },
                };
                segments.push(Segment { start: i as f64 * r.dwell, graph: g });
            }
            if end.is_none() {
                end = Some(r.count as f64 * r.dwell);
            }
        }
    }
    let Some(end) = end else {
        c.push("schedule", "", "schedule.end is required with explicit segments");
        return None;
    };
    let min_w = segments.iter().filter_map(|s| s.graph.min_positive_weight()).fold(f64::INFINITY, f64::min);
    let delta = s.delta.unwrap_or(if min_w.is_finite() { min_w } else { 1.0 });
    let horizon = s.horizon.unwrap_or(end - segments.first().map_or(0.0, |s| s.start));
    match GraphSchedule::new(segments, end, s.periodic, delta, horizon) {
        Ok(s) => Some(s),
        Err(e) => {
            c.push("schedule", "", format!("schedule: {e}"));
            None
        }
    }
}

fn build_flow(f: &RawFlow, c: &mut Collector<'_>) -> Option<FlowSpec<f64>> {
    let allowed: &[&str] = match f.kind.as_str() {
        "gradient" => &["alpha"],
        "estimator_sync" | "local_frame_son_sync" => &["beta", "gamma_s"],
        "estimator_anti_consensus" => &["beta", "gamma_b"],
        "vicsek" => &[],
        other => {
            c.push(
                "flow",
                "kind",
                format!(
                    "unknown flow.kind \"{other}\" (gradient | estimator_sync | estimator_anti_consensus | local_frame_son_sync | vicsek)"
                ),
            );
            return None;
        }
    };
    let given = [("alpha", f.alpha), ("beta", f.beta), ("gamma_s", f.gamma_s), ("gamma_b", f.gamma_b)];
    let mut ok = true;
    for (key, v) in given {
        if v.is_some() && !allowed.contains(&key) {
            c.push("flow", key, format!("flow.{key} is not a parameter of flow.kind = \"{}\"", f.kind));
            ok = false;
        }
        if v.is_none() && allowed.contains(&key) {
            c.push("flow", "kind", format!("flow.kind = \"{}\" needs flow.{key}", f.kind));
            ok = false;
        }
    }
    if !ok {
        return None;
    }
    Some(match f.kind.as_str() {
        "gradient" => FlowSpec::GradientFlow { alpha: f.alpha? },
        "estimator_sync" => FlowSpec::EstimatorSync { beta: f.beta?, gamma_s: f.gamma_s? },
        "local_frame_son_sync" => FlowSpec::LocalFrameSoNSync { beta: f.beta?, gamma_s: f.gamma_s? },
        "estimator_anti_consensus" => FlowSpec::EstimatorAntiConsensus { beta: f.beta?, gamma_b: f.gamma_b? },
        _ => FlowSpec::VicsekDiscrete,
    })
}

fn build_integrator(r: &RawIntegrator, seed: u64, c: &mut Collector<'_>) -> Option<IntegratorConfig<f64>> {
    let method = match r.method.as_str() {
        "rk4" => Method::ProjectedRK4,
        "euler" => Method::ProjectedEuler,
        other => {
            c.push("integrator", "method", format!("unknown integrator.method \"{other}\" (rk4 | euler)"));
            return None;
        }
    };
    let grassmann = match r.grassmann_representation.as_str() {
        "basis" => GrassmannRepresentation::Basis,
        "projector" => GrassmannRepresentation::Projector,
        other => {
            c.push(
                "integrator",
                "grassmann_representation",
                format!("unknown integrator.grassmann_representation \"{other}\" (basis | projector)"),
            );
            return None;
        }
    };
    let cfg = IntegratorConfig {
        step: r.step,
        t_start: r.t_start,
        t_end: r.t_end,
        method,
        log_stride: r.log_stride,
        seed,
        grassmann,
    };
    if let Err(e) = cfg.validate() {
        let key = match e.to_string() {
            s if s.contains("log_stride") => "log_stride",
            s if s.contains("t_end") => "t_end",
            _ => "step",
        };
        c.push("integrator", key, format!("integrator: {e}"));
        return None;
    }
    Some(cfg)
}

impl Scenario {
    /// Ring positions with optional seeded jitter.
    pub(crate) fn ring_angles(&self, chi: f64, offset: f64, jitter: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.n_agents)
            .map(|k| {
                let noise = if jitter > 0.0 { rng.random_range(-jitter..=jitter) } else { 0.0 };
                offset + chi * k as f64 + noise
            })
            .collect()
    }

    /// TOML echo of the (overridden) scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.raw).expect("scenario serializes")
    }
}
