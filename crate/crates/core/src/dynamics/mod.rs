//! Flows on swarms and a fixed-step projected integrator over graph
//! schedules.
//!
//! Positions are advanced in the embedding space and projected back onto the
//! manifold after every stage. Estimators live in the embedding space and
//! are never projected.

mod rhs;

pub use rhs::{
    circle_rhs, consensus_rhs, estimator_anti_rhs, estimator_sync_rhs, gradient_rhs, grassmann_basis_rhs,
    grassmann_projector_rhs, local_frame_son_rhs, so_n_rhs, vicsek_step, RelativeAttitudes,
};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consensus::{cost_p, cost_pl, sync_error, SwarmState};
use crate::error::{Error, Result};
use crate::graph::{GraphSchedule, WeightedDigraph};
use crate::linalg::polar_orthonormal;
use crate::manifolds::{basis_to_projector, projector_to_basis, ManifoldDescriptor, ManifoldPoint};
use crate::scalar::{lit, Real};

use rhs::{basis_field, consensus_field, in_neighbour_differences};

/// Largest manifold-invariant violation tolerated after re-projection.
pub const ABORT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowSpec<T> {
    /// `ẏ_k = 2α Proj_k(Σ_j a_jk (y_j − y_k))`; `α > 0` synchronizes,
    /// `α < 0` spreads.
    GradientFlow { alpha: T },
    EstimatorSync { beta: T, gamma_s: T },
    EstimatorAntiConsensus { beta: T, gamma_b: T },
    /// Estimator synchronization on SO(n) in body frames.
    LocalFrameSoNSync { beta: T, gamma_s: T },
    /// Discrete IAM update, one jump per step.
    VicsekDiscrete,
}

impl<T: Real> FlowSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GradientFlow { .. } => "gradient",
            Self::EstimatorSync { .. } => "estimator_sync",
            Self::EstimatorAntiConsensus { .. } => "estimator_anti_consensus",
            Self::LocalFrameSoNSync { .. } => "local_frame_son_sync",
            Self::VicsekDiscrete => "vicsek",
        }
    }

    pub fn validate(&self, desc: ManifoldDescriptor) -> Result<()> {
        let finite = |name: &str, v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidFlow(format!("{name} must be finite")))
            }
        };
        let positive = |name: &str, v: T| {
            finite(name, v)?;
            if v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidFlow(format!("{name} must be > 0, got {}", v.as_f64())))
            }
        };
        match *self {
            Self::GradientFlow { alpha } => {
                finite("alpha", alpha)?;
                if alpha == T::zero() {
                    return Err(Error::InvalidFlow("alpha must be nonzero".into()));
                }
                Ok(())
            }
            Self::EstimatorSync { beta, gamma_s } => {
                positive("beta", beta)?;
                positive("gamma_s", gamma_s)
            }
            Self::EstimatorAntiConsensus { beta, gamma_b } => {
                positive("beta", beta)?;
                finite("gamma_b", gamma_b)?;
                if gamma_b < T::zero() {
                    Ok(())
                } else {
                    Err(Error::InvalidFlow(format!("gamma_b must be < 0, got {}", gamma_b.as_f64())))
                }
            }
            Self::LocalFrameSoNSync { beta, gamma_s } => {
                if !matches!(desc, ManifoldDescriptor::SpecialOrthogonal { .. }) {
                    return Err(Error::InvalidFlow(format!("local-frame flow needs SO(n), got {desc}")));
                }
                positive("beta", beta)?;
                positive("gamma_s", gamma_s)
            }
            Self::VicsekDiscrete => Ok(()),
        }
    }

    fn uses_estimators(&self) -> bool {
        matches!(
            self,
            Self::EstimatorSync { .. } | Self::EstimatorAntiConsensus { .. } | Self::LocalFrameSoNSync { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    ProjectedEuler,
    #[default]
    ProjectedRK4,
}

/// Working representation of Grassmann positions for gradient flows.
/// Estimator flows always use projectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GrassmannRepresentation {
    #[default]
    Basis,
    Projector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub step: T,
    pub t_start: T,
    pub t_end: T,
    pub method: Method,
    pub log_stride: usize,
    /// Seeds the default estimator initialization.
    pub seed: u64,
    pub grassmann: GrassmannRepresentation,
}

impl<T: Real> IntegratorConfig<T> {
    /// RK4 from `t = 0`, logging every step.
    pub fn new(step: T, t_end: T) -> Self {
        Self {
            step,
            t_start: T::zero(),
            t_end,
            method: Method::ProjectedRK4,
            log_stride: 1,
            seed: 0,
            grassmann: GrassmannRepresentation::Basis,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step.as_f64())));
        }
        if !(self.t_end - self.t_start >= self.step) {
            return Err(Error::InvalidConfig(format!(
                "t_end - t_start must be at least one step (t_start = {}, t_end = {}, step = {})",
                self.t_start.as_f64(),
                self.t_end.as_f64(),
                self.step.as_f64()
            )));
        }
        if self.log_stride == 0 {
            return Err(Error::InvalidConfig("log_stride must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps: `(t_end − t_start)/step` rounded to the nearest integer.
    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.step).as_f64().round() as usize
    }

    /// Time after `i` steps.
    pub fn time_at(&self, i: usize) -> T {
        self.t_start + self.step * lit::<T>(i as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics<T> {
    /// `P_L` with respect to the graph active at the record time.
    pub p_l: T,
    pub p: T,
    pub sync_error: T,
    /// Estimator energy `½ Σ ‖x_k‖²`.
    pub w: T,
    pub centroid_norm: T,
    /// Largest invariant violation before re-projection since the previous record.
    pub manifold_drift: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Abort {
    pub time: f64,
    pub step: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<SwarmState<T>>,
    pub metrics: Vec<Metrics<T>>,
    /// Set when the run stopped early; the records end at the last good step.
    pub abort: Option<Abort>,
    pub steps_taken: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &SwarmState<T> {
        self.states.last().expect("trajectory has the initial record")
    }

    pub fn final_time(&self) -> T {
        *self.times.last().expect("trajectory has the initial record")
    }

    pub fn is_complete(&self) -> bool {
        self.abort.is_none()
    }

    pub fn max_drift(&self) -> T {
        self.metrics.iter().fold(T::zero(), |a, m| if m.manifold_drift > a { m.manifold_drift } else { a })
    }
}

/// Initial state actually used by [`integrate`]: fills in missing estimators
/// (uniform in `[−r, r]^m` for synchronization, `x_k = y_k` for
/// anti-consensus) and checks provided anti-consensus estimators at `t = 0`.
pub fn prepare_initial_state<T: Real>(flow: &FlowSpec<T>, init: &SwarmState<T>, cfg: &IntegratorConfig<T>) -> Result<SwarmState<T>> {
    match flow {
        FlowSpec::EstimatorSync { .. } | FlowSpec::LocalFrameSoNSync { .. } if init.estimators().is_none() => {
            let desc = init.descriptor();
            let r = desc.radius::<T>().as_f64();
            let (rows, cols) = desc.ambient_shape();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let xs = (0..init.n_agents())
                .map(|_| {
                    let flat: Vec<T> = (0..rows * cols).map(|_| lit(rng.random_range(-r..=r))).collect();
                    DMatrix::from_row_slice(rows, cols, &flat)
                })
                .collect();
            init.clone().with_estimators(xs)
        }
        FlowSpec::EstimatorAntiConsensus { .. } => match init.estimators() {
            None => {
                let xs = init.positions().iter().map(|p| p.matrix().clone()).collect();
                init.clone().with_estimators(xs)
            }
            Some(xs) => {
                if cfg.t_start == T::zero() {
                    for (k, (x, y)) in xs.iter().zip(init.positions()).enumerate() {
                        let gap = (x - y.matrix()).norm();
                        if gap > lit(1e-12) {
                            return Err(Error::InvalidConfig(format!(
                                "anti-consensus estimators must start at the positions; agent {k} is off by {:e}",
                                gap.as_f64()
                            )));
                        }
                    }
                }
                Ok(init.clone())
            }
        },
        _ => Ok(init.clone()),
    }
}

/// Integrates `flow` over `schedule` from `init`.
///
/// Each step uses the graph active at the start of the step. Configuration
/// errors are returned as `Err`; numerical failures during the run stop it
/// and are reported in [`Trajectory::abort`].
pub fn integrate<T: Real>(
    flow: &FlowSpec<T>,
    schedule: &GraphSchedule<T>,
    init: &SwarmState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    let desc = init.descriptor();
    flow.validate(desc)?;
    cfg.validate()?;
    if schedule.n_vertices() != init.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: format!("schedule with {} vertices", init.n_agents()),
            found: format!("schedule with {} vertices", schedule.n_vertices()),
        });
    }
    let n_steps = cfg.n_steps();
    let h = cfg.step;
    let probe = h * lit(1e-6);
    schedule.graph_at(cfg.t_start + probe)?;
    schedule.graph_at(cfg.time_at(n_steps - 1) + probe)?;
    for (k, p) in init.positions().iter().enumerate() {
        let v = p.membership_violation();
        if v > crate::scalar::membership_tol() {
            return Err(Error::NotOnManifold(format!("agent {k}: invariant violation {:e}", v.as_f64())));
        }
    }

    let start = prepare_initial_state(flow, init, cfg)?;
    let system = System {
        flow: *flow,
        desc,
        basis: matches!(flow, FlowSpec::GradientFlow { .. })
            && matches!(desc, ManifoldDescriptor::Grassmann { .. })
            && cfg.grassmann == GrassmannRepresentation::Basis,
    };

    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), metrics: Vec::new(), abort: None, steps_taken: 0 };
    let record = |traj: &mut Trajectory<T>, t: T, s: SwarmState<T>, drift: T| -> Result<()> {
        let g = schedule.graph_at(t + probe).or_else(|_| schedule.graph_at(t))?;
        traj.metrics.push(Metrics {
            p_l: cost_pl(g, &s)?,
            p: cost_p(&s),
            sync_error: sync_error(&s),
            w: s.estimator_energy(),
            centroid_norm: s.centroid().norm(),
            manifold_drift: drift,
        });
        traj.times.push(t);
        traj.states.push(s);
        Ok(())
    };
    record(&mut traj, cfg.t_start, start.clone(), T::zero())?;

    if let FlowSpec::VicsekDiscrete = flow {
        let mut s = start;
        for i in 0..n_steps {
            let g = schedule.graph_at(cfg.time_at(i) + probe)?;
            s = vicsek_step(g, &s)?;
            traj.steps_taken = i + 1;
            if (i + 1) % cfg.log_stride == 0 || i + 1 == n_steps {
                record(&mut traj, cfg.time_at(i + 1), s.clone(), T::zero())?;
            }
        }
        return Ok(traj);
    }

    let mut work = system.from_state(&start)?;
    let mut drift = T::zero();
    let mut logged = true;
    for i in 0..n_steps {
        let t = cfg.time_at(i);
        let g = schedule.graph_at(t + probe)?;
        let stepped = match cfg.method {
            Method::ProjectedEuler => system.euler(g, &work, h),
            Method::ProjectedRK4 => system.rk4(g, &work, h),
        };
        let (next, step_drift) = match stepped {
            Ok(v) => v,
            Err(e) => {
                if !logged {
                    record(&mut traj, t, system.to_state(&work)?, drift)?;
                }
                traj.abort = Some(Abort { time: t.as_f64(), step: i, reason: e.to_string() });
                return Ok(traj);
            }
        };
        if step_drift > drift {
            drift = step_drift;
        }
        let violation = system.violation(&next);
        if !(violation <= lit(ABORT_TOL)) {
            let reason = format!("invariant violation {:e} after re-projection", violation.as_f64());
            if !logged {
                record(&mut traj, t, system.to_state(&work)?, drift)?;
            }
            traj.abort = Some(Abort { time: t.as_f64(), step: i, reason });
            return Ok(traj);
        }
        work = next;
        traj.steps_taken = i + 1;
        logged = false;
        if (i + 1) % cfg.log_stride == 0 || i + 1 == n_steps {
            record(&mut traj, cfg.time_at(i + 1), system.to_state(&work)?, drift)?;
            drift = T::zero();
            logged = true;
        }
    }
    Ok(traj)
}

/// Flow in its working coordinates. `pos` holds ambient manifold points or
/// Grassmann bases; `aux` holds estimators (`x` for synchronization, `x − y`
/// for anti-consensus, body-frame `Z` for the local-frame flow).
#[derive(Clone, Debug)]
struct Work<T: Real> {
    pos: Vec<DMatrix<T>>,
    aux: Vec<DMatrix<T>>,
}

struct System<T> {
    flow: FlowSpec<T>,
    desc: ManifoldDescriptor,
    basis: bool,
}

impl<T: Real> System<T> {
    fn from_state(&self, s: &SwarmState<T>) -> Result<Work<T>> {
        let pos: Vec<DMatrix<T>> = if self.basis {
            s.positions()
                .iter()
                .map(|p| projector_to_basis(p).map(|b| b.matrix().clone()))
                .collect::<Result<_>>()?
        } else {
            s.positions().iter().map(|p| p.matrix().clone()).collect()
        };
        let xs = s.estimators().map(|x| x.to_vec()).unwrap_or_default();
        let aux = match self.flow {
            FlowSpec::EstimatorAntiConsensus { .. } => xs.iter().zip(&pos).map(|(x, y)| x - y).collect(),
            FlowSpec::LocalFrameSoNSync { .. } => xs.iter().zip(&pos).map(|(x, q)| q.transpose() * x).collect(),
            _ => xs,
        };
        if self.flow.uses_estimators() && aux.len() != pos.len() {
            return Err(Error::MissingEstimators);
        }
        Ok(Work { pos, aux })
    }

    fn to_state(&self, w: &Work<T>) -> Result<SwarmState<T>> {
        let positions = w
            .pos
            .iter()
            .map(|m| {
                if self.basis {
                    ManifoldPoint::from_trusted(self.desc, m * m.transpose())
                } else {
                    ManifoldPoint::from_trusted(self.desc, m.clone())
                }
            })
            .collect();
        let s = SwarmState::new(positions)?;
        if w.aux.is_empty() {
            return Ok(s);
        }
        let xs = match self.flow {
            FlowSpec::EstimatorAntiConsensus { .. } => w.aux.iter().zip(&w.pos).map(|(e, y)| e + y).collect(),
            FlowSpec::LocalFrameSoNSync { .. } => w.aux.iter().zip(&w.pos).map(|(z, q)| q * z).collect(),
            _ => w.aux.clone(),
        };
        s.with_estimators(xs)
    }

    fn field(&self, g: &WeightedDigraph<T>, w: &Work<T>) -> Result<Work<T>> {
        let a = g.adjacency();
        let zeros = |v: &[DMatrix<T>]| v.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect();
        Ok(match self.flow {
            FlowSpec::GradientFlow { alpha } => {
                let pos = if self.basis { basis_field(a, &w.pos, alpha) } else { consensus_field(self.desc, a, &w.pos, alpha) };
                Work { pos, aux: zeros(&w.aux) }
            }
            FlowSpec::EstimatorSync { beta, gamma_s } => {
                let pos = w
                    .pos
                    .iter()
                    .zip(&w.aux)
                    .map(|(y, x)| self.desc.tangent_project_ambient(y, x) * gamma_s)
                    .collect();
                let aux = in_neighbour_differences(a, &w.aux).into_iter().map(|v| v * beta).collect();
                Work { pos, aux }
            }
            FlowSpec::EstimatorAntiConsensus { beta, gamma_b } => {
                let xs: Vec<DMatrix<T>> = w.aux.iter().zip(&w.pos).map(|(e, y)| e + y).collect();
                let pos = w
                    .pos
                    .iter()
                    .zip(&xs)
                    .map(|(y, x)| self.desc.tangent_project_ambient(y, x) * gamma_b)
                    .collect();
                let aux = in_neighbour_differences(a, &xs).into_iter().map(|v| v * beta).collect();
                Work { pos, aux }
            }
            FlowSpec::LocalFrameSoNSync { beta, gamma_s } => {
                let rel = RelativeAttitudes::measure(g, &w.pos)?;
                let (zdots, omegas) = local_frame_son_rhs(g, &w.aux, &rel, beta, gamma_s)?;
                let pos = w.pos.iter().zip(&omegas).map(|(q, o)| q * o).collect();
                Work { pos, aux: zdots }
            }
            FlowSpec::VicsekDiscrete => unreachable!("discrete flow has no vector field"),
        })
    }

    fn project(&self, m: &DMatrix<T>) -> Result<DMatrix<T>> {
        if self.basis {
            let (q, s) = polar_orthonormal(m);
            if !(s[s.len() - 1] > lit(1e-8)) {
                return Err(Error::Retraction("basis update lost rank".into()));
            }
            Ok(q)
        } else {
            self.desc.project_ambient(m)
        }
    }

    fn position_violation(&self, m: &DMatrix<T>) -> T {
        if self.basis {
            (m.transpose() * m - DMatrix::identity(m.ncols(), m.ncols())).norm()
        } else {
            self.desc.membership_violation(m)
        }
    }

    fn violation(&self, w: &Work<T>) -> T {
        w.pos.iter().map(|m| self.position_violation(m)).fold(T::zero(), |a, v| if v > a { v } else { a })
    }

    /// `base + h·d` with positions projected; also returns the largest
    /// violation before projection.
    fn advance(&self, base: &Work<T>, d: &Work<T>, h: T) -> Result<(Work<T>, T)> {
        let mut drift = T::zero();
        let mut pos = Vec::with_capacity(base.pos.len());
        for (y, v) in base.pos.iter().zip(&d.pos) {
            let raw = y + v * h;
            let viol = self.position_violation(&raw);
            if viol > drift {
                drift = viol;
            }
            pos.push(self.project(&raw)?);
        }
        let aux = base.aux.iter().zip(&d.aux).map(|(x, v)| x + v * h).collect();
        Ok((Work { pos, aux }, drift))
    }

    fn euler(&self, g: &WeightedDigraph<T>, w: &Work<T>, h: T) -> Result<(Work<T>, T)> {
        let k1 = self.field(g, w)?;
        self.advance(w, &k1, h)
    }

    fn rk4(&self, g: &WeightedDigraph<T>, w: &Work<T>, h: T) -> Result<(Work<T>, T)> {
        let half = h * lit(0.5);
        let k1 = self.field(g, w)?;
        let k2 = self.field(g, &self.advance(w, &k1, half)?.0)?;
        let k3 = self.field(g, &self.advance(w, &k2, half)?.0)?;
        let k4 = self.field(g, &self.advance(w, &k3, h)?.0)?;
        let sixth = lit::<T>(1.0 / 6.0);
        let third = lit::<T>(1.0 / 3.0);
        let combine = |a: &[DMatrix<T>], b: &[DMatrix<T>], c: &[DMatrix<T>], d: &[DMatrix<T>]| -> Vec<DMatrix<T>> {
            (0..a.len()).map(|i| (&a[i] + &d[i]) * sixth + (&b[i] + &c[i]) * third).collect()
        };
        let dir = Work { pos: combine(&k1.pos, &k2.pos, &k3.pos, &k4.pos), aux: combine(&k1.aux, &k2.aux, &k3.aux, &k4.aux) };
        self.advance(w, &dir, h)
    }
}

/// Projector-form positions of a basis-form swarm.
pub fn bases_to_state<T: Real>(bases: &[crate::manifolds::GrassmannBasis<T>]) -> Result<SwarmState<T>> {
    SwarmState::new(bases.iter().map(basis_to_projector).collect())
}
