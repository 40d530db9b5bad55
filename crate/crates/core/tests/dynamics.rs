use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use manifold_consensus::consensus::{cost_pl, sync_error, SwarmState};
use manifold_consensus::dynamics::{
    circle_rhs, consensus_rhs, estimator_anti_rhs, estimator_sync_rhs, gradient_rhs, grassmann_basis_rhs,
    grassmann_projector_rhs, integrate, local_frame_son_rhs, so_n_rhs, vicsek_step, RelativeAttitudes,
};
use manifold_consensus::graph::{GraphSchedule, WeightedDigraph};
use manifold_consensus::manifolds::{projector_to_basis, random_point, ManifoldDescriptor, ManifoldPoint};
use manifold_consensus::{Error, FlowSpec, IntegratorConfig, Method};
use nalgebra::DMatrix;

fn circle(angles: &[f64]) -> SwarmState<f64> {
    SwarmState::new(angles.iter().map(|&a| ManifoldPoint::from_angle(a)).collect()).unwrap()
}

fn random_swarm(desc: ManifoldDescriptor, n: usize, seed: u64) -> SwarmState<f64> {
    SwarmState::new((0..n).map(|k| random_point(desc, seed * 1000 + k as u64).unwrap()).collect()).unwrap()
}

fn max_norm(v: &[DMatrix<f64>]) -> f64 {
    v.iter().map(|m| m.norm()).fold(0.0, f64::max)
}

fn so3() -> ManifoldDescriptor {
    ManifoldDescriptor::special_orthogonal(3).unwrap()
}

#[test]
fn gradient_rhs_examples() {
    let g = WeightedDigraph::complete(3, 1.0).unwrap();
    assert_eq!(max_norm(&gradient_rhs(&g, &circle(&[0.4; 3]), 1.0).unwrap()), 0.0);
    let balanced = circle(&[0.0, TAU / 3.0, 2.0 * TAU / 3.0]);
    assert!(max_norm(&gradient_rhs(&g, &balanced, 1.0).unwrap()) < 1e-15);

    let alpha = 0.7;
    let g2 = WeightedDigraph::complete(2, 1.0).unwrap();
    let s = circle(&[0.0, FRAC_PI_2]);
    let v = gradient_rhs(&g2, &s, alpha).unwrap();
    // tangent direction at θ is (−sin θ, cos θ)
    let th0 = v[0][1];
    let th1 = -v[1][0];
    assert!((th0 - 2.0 * alpha).abs() < 1e-14);
    assert!((th1 + 2.0 * alpha).abs() < 1e-14);
}

#[test]
fn gradient_identities() {
    for seed in 0..5 {
        for d in [ManifoldDescriptor::Circle, so3(), ManifoldDescriptor::grassmann(2, 4).unwrap()] {
            let s = random_swarm(d, 6, seed);
            let ring = WeightedDigraph::ring_undirected(6, 1.5).unwrap();
            let a = gradient_rhs(&ring, &s, 0.3).unwrap();
            let b = consensus_rhs(&ring, &s, 0.3).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12);
            }
            let complete = WeightedDigraph::complete(6, 1.0).unwrap();
            let v = gradient_rhs(&complete, &s, 0.3).unwrap();
            let c = s.centroid().matrix().clone();
            for (vk, yk) in v.iter().zip(s.positions()) {
                let expected = yk.tangent_project(&(&c - yk.matrix())).unwrap() * (2.0 * 0.3 * 6.0);
                assert!((vk - expected).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn specializations_examples() {
    let ring = WeightedDigraph::ring_undirected(3, 1.0).unwrap();
    let v = circle_rhs(&ring, &[0.0, TAU / 3.0, 2.0 * TAU / 3.0], 1.0).unwrap();
    assert!(v.iter().all(|x| x.abs() < 1e-14));

    let q: ManifoldPoint<f64> = random_point(so3(), 2).unwrap();
    let qs = vec![q.matrix().clone(); 3];
    assert!(max_norm(&so_n_rhs(&ring, &qs, 1.0).unwrap()) < 1e-14);

    let pi: ManifoldPoint<f64> = random_point(ManifoldDescriptor::grassmann(2, 5).unwrap(), 4).unwrap();
    let pis = vec![pi.matrix().clone(); 3];
    assert!(max_norm(&grassmann_projector_rhs(&ring, &pis, 1.0).unwrap()) < 1e-14);
    let y = projector_to_basis(&pi).unwrap().matrix().clone();
    assert!(max_norm(&grassmann_basis_rhs(&ring, &vec![y; 3], 1.0).unwrap()) < 1e-14);
}

#[test]
fn estimator_rhs_examples() {
    let g = WeightedDigraph::complete(2, 1.0).unwrap();
    let x = DMatrix::from_column_slice(2, 1, &[0.3, 0.4]);
    let y = ManifoldPoint::from_angle(0.4f64.atan2(0.3));
    let s = SwarmState::new(vec![y.clone(), y]).unwrap().with_estimators(vec![x.clone(), x]).unwrap();
    let (xd, yd) = estimator_sync_rhs(&g, &s, 1.0, 1.0).unwrap();
    assert!(max_norm(&xd) < 1e-15 && max_norm(&yd) < 1e-15);

    let s = circle(&[0.0, 1.0])
        .with_estimators(vec![DMatrix::from_column_slice(2, 1, &[1.0, 2.0]), DMatrix::from_column_slice(2, 1, &[-1.0, 0.5])])
        .unwrap();
    let (xd, _) = estimator_sync_rhs(&g, &s, 0.8, 1.0).unwrap();
    assert!((&xd[0] + &xd[1]).norm() < 1e-15);

    let cycle = WeightedDigraph::directed_cycle(3, 2.0).unwrap();
    let s = random_swarm(so3(), 3, 9)
        .with_estimators((0..3).map(|k| DMatrix::from_fn(3, 3, |i, j| (i + 2 * j + k) as f64 * 0.1)).collect())
        .unwrap();
    let (xd, yd) = estimator_sync_rhs(&cycle, &s, 1.3, 1.0).unwrap();
    assert!(xd.iter().fold(DMatrix::zeros(3, 3), |a, m| a + m).norm() < 1e-14);
    let (xa, ya) = estimator_anti_rhs(&cycle, &s, 1.3, -1.0).unwrap();
    let sx = xa.iter().fold(DMatrix::zeros(3, 3), |a, m| a + m);
    let sy = ya.iter().fold(DMatrix::zeros(3, 3), |a, m| a + m);
    assert!((sx - sy).norm() < 1e-14);
    assert!(yd.iter().zip(&ya).all(|(a, b)| (a + b).norm() < 1e-14));

    assert!(matches!(estimator_sync_rhs(&g, &circle(&[0.0, 1.0]), 1.0, 1.0), Err(Error::MissingEstimators)));
}

#[test]
fn anti_rhs_edge_cases() {
    let g = WeightedDigraph::complete(2, 1.0).unwrap();
    let x = DMatrix::from_column_slice(2, 1, &[0.2, -0.1]);
    let s = circle(&[0.0, 2.0]).with_estimators(vec![x.clone(), x]).unwrap();
    let (xd, yd) = estimator_anti_rhs(&g, &s, 1.0, 0.0).unwrap();
    assert_eq!(max_norm(&xd), 0.0);
    assert_eq!(max_norm(&yd), 0.0);

    let single = WeightedDigraph::empty(1).unwrap();
    let s = circle(&[0.3]).with_estimators(vec![DMatrix::from_column_slice(2, 1, &[0.0, 1.0])]).unwrap();
    let (xd, yd) = estimator_anti_rhs(&single, &s, 1.0, -1.0).unwrap();
    assert_eq!(xd[0], yd[0]);
    // the position moves away from its estimator
    let x = s.estimators().unwrap()[0].clone();
    let y = s.positions()[0].matrix();
    assert!((yd[0].transpose() * &x)[0] < 0.0 || (x - y).norm() < 1e-12);
}

#[test]
fn local_frame_examples() {
    let g = WeightedDigraph::complete(3, 1.0).unwrap();
    let q: ManifoldPoint<f64> = random_point(so3(), 1).unwrap();
    let qs = vec![q.matrix().clone(); 3];
    let rel = RelativeAttitudes::measure(&g, &qs).unwrap();
    assert_eq!(rel.len(), 6);
    let sym = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
    let (zd, om) = local_frame_son_rhs(&g, &vec![sym.clone(); 3], &rel, 1.0, 2.0).unwrap();
    assert!(max_norm(&om) == 0.0);
    assert!(max_norm(&zd) < 1e-14);

    let mut partial = RelativeAttitudes::new();
    partial.insert(0, 1, DMatrix::identity(3, 3));
    assert!(matches!(
        local_frame_son_rhs(&g, &vec![sym; 3], &partial, 1.0, 1.0),
        Err(Error::MissingRelativePosition { .. })
    ));
}

#[test]
fn vicsek_examples() {
    let g = WeightedDigraph::complete(2, 1.0).unwrap();
    let next = vicsek_step(&g, &circle(&[0.0, FRAC_PI_2])).unwrap();
    for p in next.positions() {
        assert!((p.angle().unwrap() - FRAC_PI_4).abs() < 1e-14);
    }
    let s = circle(&[1.1; 3]);
    assert_eq!(vicsek_step(&WeightedDigraph::complete(3, 1.0).unwrap(), &s).unwrap(), s);
    let s = circle(&[0.1, 2.0]);
    assert_eq!(vicsek_step(&WeightedDigraph::empty(2).unwrap(), &s).unwrap(), s);
    // antipodal pair: degenerate IAM, agents stay
    let s = circle(&[0.0, std::f64::consts::PI]);
    assert_eq!(vicsek_step(&g, &s).unwrap(), s);
}

#[test]
fn integrate_static_state_is_constant() {
    let s = random_swarm(so3(), 1, 3);
    let s = SwarmState::new(vec![s.positions()[0].clone(); 4]).unwrap();
    let sched = GraphSchedule::constant(WeightedDigraph::complete(4, 1.0).unwrap());
    let traj = integrate(&FlowSpec::GradientFlow { alpha: 1.0 }, &sched, &s, &IntegratorConfig::new(0.01, 1.0)).unwrap();
    assert!(traj.is_complete());
    assert_eq!(traj.len(), 101);
    let p0 = traj.metrics[0].p_l;
    for (m, st) in traj.metrics.iter().zip(&traj.states) {
        assert!((m.p_l - p0).abs() < 1e-14);
        assert!((st.positions()[0].matrix() - s.positions()[0].matrix()).norm() < 1e-14);
    }
}

#[test]
fn kuramoto_complete_graph_synchronizes() {
    let alpha = 0.5;
    let s = SwarmState::new((0..10).map(|k| ManifoldPoint::from_angle(0.4 * k as f64 + 0.05 * (k * k) as f64)).collect()).unwrap();
    let sched = GraphSchedule::constant(WeightedDigraph::complete(10, 1.0).unwrap());
    let mut cfg = IntegratorConfig::new(0.01, 50.0 / alpha);
    cfg.log_stride = 100;
    let traj = integrate(&FlowSpec::GradientFlow { alpha }, &sched, &s, &cfg).unwrap();
    assert!(sync_error(traj.final_state()) < 1e-6);
}

fn final_distance(method: Method, h: f64) -> SwarmState<f64> {
    let s = random_swarm(so3(), 4, 21);
    let sched = GraphSchedule::constant(WeightedDigraph::ring_undirected(4, 1.0).unwrap());
    let mut cfg = IntegratorConfig::new(h, 1.0);
    cfg.method = method;
    cfg.log_stride = 1000;
    integrate(&FlowSpec::GradientFlow { alpha: 0.5 }, &sched, &s, &cfg).unwrap().final_state().clone()
}

fn state_gap(a: &SwarmState<f64>, b: &SwarmState<f64>) -> f64 {
    a.positions().iter().zip(b.positions()).map(|(x, y)| (x.matrix() - y.matrix()).norm()).fold(0.0, f64::max)
}

#[test]
fn convergence_orders() {
    let reference = final_distance(Method::ProjectedRK4, 0.001);
    let e1 = state_gap(&final_distance(Method::ProjectedEuler, 0.02), &reference);
    let e2 = state_gap(&final_distance(Method::ProjectedEuler, 0.01), &reference);
    let ratio = e1 / e2;
    assert!(ratio > 1.7 && ratio < 2.3, "Euler ratio {ratio}");

    let r1 = state_gap(&final_distance(Method::ProjectedRK4, 0.1), &reference);
    let r2 = state_gap(&final_distance(Method::ProjectedRK4, 0.05), &reference);
    let ratio = r1 / r2;
    assert!(ratio > 10.0, "RK4 ratio {ratio}");
}

#[test]
fn directed_cycle_switching_runs_and_logs() {
    let a = WeightedDigraph::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap();
    let b = WeightedDigraph::from_rows(&[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
    let sched = GraphSchedule::new(
        vec![
            manifold_consensus::graph::Segment { start: 0.0, graph: a },
            manifold_consensus::graph::Segment { start: 0.5, graph: b },
        ],
        1.0,
        true,
        1.0,
        1.0,
    )
    .unwrap();
    let s = circle(&[0.0, 1.0, 2.0]);
    let mut cfg = IntegratorConfig::new(0.01, 3.0);
    cfg.log_stride = 7;
    let traj = integrate(&FlowSpec::EstimatorSync { beta: 1.0, gamma_s: 1.0 }, &sched, &s, &cfg).unwrap();
    assert!(traj.is_complete());
    assert_eq!(traj.steps_taken, 300);
    assert_eq!(traj.len(), 1 + 300 / 7 + 1);
    assert!((traj.final_time() - 3.0).abs() < 1e-12);
    assert!(traj.max_drift() > 0.0 && traj.max_drift() < 1e-3);
    let p = cost_pl(sched.graph_at(0.0).unwrap(), &traj.states[0]).unwrap();
    assert_eq!(p, traj.metrics[0].p_l);
}

#[test]
fn integrate_validation_errors() {
    let s = circle(&[0.0, 1.0]);
    let sched = GraphSchedule::constant(WeightedDigraph::complete(2, 1.0).unwrap());
    let cfg = IntegratorConfig::new(0.1, 1.0);
    assert!(matches!(
        integrate(&FlowSpec::EstimatorAntiConsensus { beta: 1.0, gamma_b: 1.0 }, &sched, &s, &cfg),
        Err(Error::InvalidFlow(_))
    ));
    assert!(matches!(
        integrate(&FlowSpec::LocalFrameSoNSync { beta: 1.0, gamma_s: 1.0 }, &sched, &s, &cfg),
        Err(Error::InvalidFlow(_))
    ));
    let wrong = GraphSchedule::constant(WeightedDigraph::complete(3, 1.0).unwrap());
    assert!(integrate(&FlowSpec::GradientFlow { alpha: 1.0 }, &wrong, &s, &cfg).is_err());
    assert!(integrate(&FlowSpec::GradientFlow { alpha: 1.0 }, &sched, &s, &IntegratorConfig::new(-0.1, 1.0)).is_err());

    let bad_est = s.clone().with_estimators(vec![DMatrix::zeros(2, 1), DMatrix::zeros(2, 1)]).unwrap();
    assert!(matches!(
        integrate(&FlowSpec::EstimatorAntiConsensus { beta: 1.0, gamma_b: -1.0 }, &sched, &bad_est, &cfg),
        Err(Error::InvalidConfig(_))
    ));

    let finite = GraphSchedule::new(
        vec![manifold_consensus::graph::Segment { start: 0.0, graph: WeightedDigraph::complete(2, 1.0).unwrap() }],
        0.5,
        false,
        1.0,
        1.0,
    )
    .unwrap();
    assert!(matches!(
        integrate(&FlowSpec::GradientFlow { alpha: 1.0 }, &finite, &s, &cfg),
        Err(Error::ScheduleCoverage { .. })
    ));
}

#[test]
fn numerical_blowup_aborts_with_partial_trajectory() {
    let s = circle(&[0.0, 1.0]);
    let sched = GraphSchedule::constant(WeightedDigraph::complete(2, 1.0).unwrap());
    let traj = integrate(&FlowSpec::GradientFlow { alpha: 1e308 }, &sched, &s, &IntegratorConfig::new(0.1, 1.0)).unwrap();
    let abort = traj.abort.as_ref().expect("run must abort");
    assert_eq!(abort.step, 0);
    assert_eq!(traj.len(), 1);
}

#[test]
fn vicsek_integration_synchronizes() {
    let s = SwarmState::new((0..6).map(|k| ManifoldPoint::from_angle(0.3 * k as f64)).collect()).unwrap();
    let sched = GraphSchedule::constant(WeightedDigraph::ring_undirected(6, 1.0).unwrap());
    let traj = integrate(&FlowSpec::VicsekDiscrete, &sched, &s, &IntegratorConfig::new(1.0, 200.0)).unwrap();
    assert!(sync_error(traj.final_state()) < 1e-8);
}

#[test]
fn grassmann_representations_agree() {
    let d = ManifoldDescriptor::grassmann(2, 4).unwrap();
    let s = random_swarm(d, 5, 8);
    let sched = GraphSchedule::constant(WeightedDigraph::ring_undirected(5, 1.0).unwrap());
    let mut cfg = IntegratorConfig::new(0.01, 2.0);
    cfg.log_stride = 200;
    let a = integrate(&FlowSpec::GradientFlow { alpha: 1.0 }, &sched, &s, &cfg).unwrap();
    cfg.grassmann = manifold_consensus::GrassmannRepresentation::Projector;
    let b = integrate(&FlowSpec::GradientFlow { alpha: 1.0 }, &sched, &s, &cfg).unwrap();
    assert!(state_gap(a.final_state(), b.final_state()) < 1e-7);
}

#[test]
fn single_precision_flow() {
    let s = SwarmState::new((0..5).map(|k| ManifoldPoint::<f32>::from_angle(0.5 * k as f32)).collect()).unwrap();
    let sched = GraphSchedule::constant(WeightedDigraph::complete(5, 1.0f32).unwrap());
    let mut cfg = IntegratorConfig::new(0.01f32, 20.0);
    cfg.log_stride = 100;
    let traj = integrate(&FlowSpec::GradientFlow { alpha: 1.0f32 }, &sched, &s, &cfg).unwrap();
    assert!(sync_error(traj.final_state()) < 1e-3);
}
