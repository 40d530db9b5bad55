use std::path::Path;
use std::process::Command;

use manifold_consensus::consensus::sync_error;
use manifold_consensus::{FlowSpec, ManifoldDescriptor, Method};
use manifold_consensus_cli::scenario::{build, parse_raw, InitSpec};
use manifold_consensus_cli::{parse_scenario, presets, run, write_outputs, Job, Overrides, StateFile};

const MINIMAL: &str = r#"
name = "minimal"

[manifold]
kind = "circle"

[agents]
count = 5

[graph]
kind = "complete"

[flow]
kind = "gradient"
alpha = 1.0

[integrator]
step = 0.05
t_end = 2.0
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcons"))
}

#[test]
fn minimal_scenario_fills_defaults() {
    let sc = parse_scenario(MINIMAL, Path::new(".")).unwrap();
    assert_eq!(sc.descriptor, ManifoldDescriptor::Circle);
    assert_eq!(sc.n_agents, 5);
    assert_eq!(sc.init, InitSpec::Random { seed: 0 });
    assert_eq!(sc.flow, FlowSpec::GradientFlow { alpha: 1.0 });
    assert_eq!(sc.config.method, Method::ProjectedRK4);
    assert_eq!(sc.config.log_stride, 1);
    assert_eq!(sc.config.t_start, 0.0);
    assert_eq!(sc.tolerances.predicate, 1e-6);
    assert_eq!(sc.schedule.segments().len(), 1);
}

#[test]
fn size_mismatch_names_both_fields() {
    let text = MINIMAL.replace("count = 5", "count = 4").replace(
        "kind = \"complete\"",
        "kind = \"explicit\"\nadjacency = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]",
    );
    let err = parse_scenario(&text, Path::new(".")).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("graph.adjacency") && msg.contains("agents.count"), "{msg}");
    let line = text.lines().position(|l| l.starts_with("adjacency")).unwrap() + 1;
    assert_eq!(err.issues[0].line, Some(line));

    let text = MINIMAL.replace("[agents]\ncount = 5", "[agents]\ncount = 4\ninit = \"explicit\"\nangles = [0.0, 1.0, 2.0]");
    let msg = parse_scenario(&text, Path::new(".")).unwrap_err().to_string();
    assert!(msg.contains("agents.count = 4") && msg.contains("agents.angles has 3"), "{msg}");
}

#[test]
fn sign_constraints_are_enforced() {
    let text = MINIMAL.replace(
        "kind = \"gradient\"\nalpha = 1.0",
        "kind = \"estimator_anti_consensus\"\nbeta = 1.0\ngamma_b = 0.5",
    );
    let err = parse_scenario(&text, Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("gamma_b must be < 0"), "{err}");
    let line = text.lines().position(|l| l.starts_with("gamma_b")).unwrap() + 1;
    assert_eq!(err.issues[0].line, Some(line));

    let text = MINIMAL.replace("alpha = 1.0", "alpha = 0.0");
    assert!(parse_scenario(&text, Path::new(".")).unwrap_err().to_string().contains("alpha"));

    let text = MINIMAL.replace("alpha = 1.0", "alpha = 1.0\nbeta = 2.0");
    let msg = parse_scenario(&text, Path::new(".")).unwrap_err().to_string();
    assert!(msg.contains("flow.beta is not a parameter"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected_with_lines() {
    let text = MINIMAL.replace("step = 0.05", "step = 0.05\nstpe = 0.1");
    let err = parse_scenario(&text, Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("stpe"), "{err}");
    let line = text.lines().position(|l| l.starts_with("stpe")).unwrap() + 1;
    assert_eq!(err.issues[0].line, Some(line));
    assert!(err.to_string().starts_with(&format!("line {line}:")));

    let err = parse_scenario("name = \"x\"\n[manifold\n", Path::new(".")).unwrap_err();
    assert_eq!(err.issues[0].line, Some(2));
}

#[test]
fn several_problems_are_reported_together() {
    let text = MINIMAL.replace("kind = \"circle\"", "kind = \"torus\"").replace("step = 0.05", "step = -1.0");
    let err = parse_scenario(&text, Path::new(".")).unwrap_err();
    assert_eq!(err.issues.len(), 2, "{err}");
}

#[test]
fn presets_round_trip_through_the_parser() {
    assert!(presets::PRESETS.len() >= 11);
    for (name, text) in presets::PRESETS {
        let sc = parse_scenario(text, Path::new(".")).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(sc.raw.name, *name);
        let again = parse_scenario(&sc.to_toml(), Path::new(".")).unwrap();
        assert_eq!(again, sc, "{name}");
    }
}

#[test]
fn directed_switching_preset_is_never_strongly_connected() {
    let sc = parse_scenario(presets::preset("estimator_directed_switching").unwrap(), Path::new(".")).unwrap();
    for seg in sc.schedule.segments() {
        assert!(!seg.graph.connectivity().strongly_connected);
    }
    let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.005).collect();
    assert!(sc.schedule.is_uniformly_connected(&grid).unwrap().connected);
}

#[test]
fn preset_outcomes() {
    let summary = |name: &str| {
        let sc = parse_scenario(presets::preset(name).unwrap(), Path::new(".")).unwrap();
        run(&sc).unwrap().summary
    };
    let s = summary("kuramoto_sync");
    assert!(s.predicates.synchronized && s.predicates.consensus);
    let s = summary("circle_limit_cycle");
    assert!(!s.predicates.synchronized);
    assert!(s.pl_oscillation.extrema >= 10 && s.pl_oscillation.late_amplitude > 1e-3, "{:?}", s.pl_oscillation);
    let s = summary("grass_balance");
    assert!(s.predicates.balanced && s.predicates.anti_consensus);
    let s = summary("son_balance_antipodal");
    assert!(s.predicates.balanced);
    let s = summary("ring_consensus");
    assert!(s.predicates.consensus && !s.predicates.synchronized);
    let s = summary("estimator_balancing");
    assert!(s.predicates.tangent_residual < 1e-5);
    for name in ["son_sync", "estimator_directed_switching", "local_frame_equivalence", "random_digraph_sweep"] {
        assert!(summary(name).predicates.synchronized, "{name}");
    }
}

#[test]
fn outputs_have_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let sc = parse_scenario(MINIMAL, Path::new(".")).unwrap();
    let out = run(&sc).unwrap();
    write_outputs(&sc, &out, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,P_L,P,sync_error,W,centroid_norm,manifold_drift"));
    assert_eq!(lines.count(), 41);
    let state: StateFile = serde_json::from_str(&std::fs::read_to_string(dir.path().join("final_state.json")).unwrap()).unwrap();
    assert_eq!(state.positions.len(), 5);
    assert_eq!(state.time, 2.0);
    assert_eq!(state.scenario.as_ref().unwrap().name, "minimal");
    let restored = state.to_state().unwrap();
    assert_eq!(sync_error(&restored), sync_error(out.trajectory.final_state()));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["predicates"]["synchronized"], true);
}

#[test]
fn explicit_so3_state_with_estimators() {
    let text = r#"
name = "explicit"
[manifold]
kind = "so"
n = 3
[agents]
count = 2
init = "explicit"
matrices = [[1, 0, 0, 0, 1, 0, 0, 0, 1], [0, -1, 0, 1, 0, 0, 0, 0, 1]]
estimators = [[1, 0, 0, 0, 1, 0, 0, 0, 1], [1, 0, 0, 0, 1, 0, 0, 0, 1]]
[graph]
kind = "complete"
[flow]
kind = "estimator_sync"
beta = 1.0
gamma_s = 1.0
[integrator]
step = 0.01
t_end = 40.0
log_stride = 100
"#;
    let sc = parse_scenario(text, Path::new(".")).unwrap();
    let out = run(&sc).unwrap();
    assert!(out.summary.predicates.synchronized, "{:?}", out.summary.final_metrics);

    let bad = text.replace("[0, -1, 0, 1, 0, 0, 0, 0, 1]", "[0, 1, 0, 1, 0, 0, 0, 0, 1]");
    let msg = parse_scenario(&bad, Path::new(".")).unwrap_err().to_string();
    assert!(msg.contains("agents.matrices[1]"), "{msg}");
}

#[test]
fn state_file_with_wrong_size_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let sc = parse_scenario(MINIMAL, Path::new(".")).unwrap();
    write_outputs(&sc, &run(&sc).unwrap(), dir.path()).unwrap();
    let text = MINIMAL.replace("count = 5", "count = 6\ninit = \"state_file\"\npath = \"final_state.json\"");
    let sc = parse_scenario(&text, dir.path()).unwrap();
    let err = run(&sc).err().unwrap();
    assert!(err.to_string().contains("agents.count = 6"), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn overrides_replace_seed_step_and_stride() {
    let o = Overrides { seed: Some(9), step: Some(0.1), log_stride: Some(4) };
    let mut raw = parse_raw(MINIMAL).unwrap();
    o.apply(&mut raw);
    let sc = build(raw, None, Path::new(".")).unwrap();
    assert_eq!(sc.raw.seed, 9);
    assert_eq!(sc.config.step, 0.1);
    assert_eq!(sc.config.log_stride, 4);
    assert_eq!(sc.init, InitSpec::Random { seed: 9 });
}

#[test]
fn random_switching_is_seeded() {
    let a = parse_scenario(presets::preset("random_digraph_sweep").unwrap(), Path::new(".")).unwrap();
    let b = parse_scenario(presets::preset("random_digraph_sweep").unwrap(), Path::new(".")).unwrap();
    assert_eq!(a.schedule, b.schedule);
    assert_eq!(a.schedule.segments().len(), 100);
    let c = manifold_consensus_cli::parse_with_overrides(
        presets::preset("random_digraph_sweep").unwrap(),
        Path::new("."),
        &Overrides { seed: Some(1), ..Overrides::default() },
    )
    .unwrap();
    assert_ne!(a.schedule, c.schedule);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, MINIMAL).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, MINIMAL.replace("alpha = 1.0", "alpha = 1.0\ngamma = 2")).unwrap();
    let blowup = dir.path().join("blowup.toml");
    std::fs::write(&blowup, MINIMAL.replace("alpha = 1.0", "alpha = 1e308")).unwrap();

    let out = bin().arg("validate").arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let out_dir = dir.path().join("run");
    let out = bin().arg("run").arg(&good).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("summary.json").exists());

    let abort_dir = dir.path().join("abort");
    let out = bin().arg("run").arg(&blowup).arg("--out").arg(&abort_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(abort_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "aborted");
    assert!(summary["abort"]["reason"].is_string());

    let out = bin().args(["preset", "no_such_preset"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().arg("list").output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), presets::PRESETS.len());
}

#[test]
fn parallel_jobs_use_separate_directories() {
    let dir = tempfile::tempdir().unwrap();
    let jobs: Vec<Job> = ["kuramoto_sync", "grass_balance", "vicsek_discrete"].iter().map(|n| Job::preset(n).unwrap()).collect();
    let reports = manifold_consensus_cli::execute_all(&jobs, &Overrides::default(), dir.path(), 3);
    assert!(reports.iter().all(|r| r.code == 0));
    let serial = tempfile::tempdir().unwrap();
    for job in &jobs {
        manifold_consensus_cli::execute(job, &Overrides::default(), &serial.path().join(&job.label));
        for file in ["metrics.csv", "final_state.json", "summary.json"] {
            let a = std::fs::read(dir.path().join(&job.label).join(file)).unwrap();
            let b = std::fs::read(serial.path().join(&job.label).join(file)).unwrap();
            assert_eq!(a, b, "{}/{file}", job.label);
        }
    }
}
