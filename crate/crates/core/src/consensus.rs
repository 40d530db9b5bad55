//! Swarm states, consensus costs and configuration predicates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, WeightedDigraph};
use crate::linalg::frobenius_dot;
use crate::manifolds::{ManifoldDescriptor, ManifoldPoint};
use crate::means::{aiam, centroid_uniform, iam, iam_value, Centroid, Degeneracy};
use crate::scalar::{lit, Real};

/// Default absolute tolerance of the configuration predicates.
pub const PREDICATE_TOL: f64 = 1e-6;

/// Positions of `N` agents, optionally with one estimator per agent in the
/// embedding space (matrix layout).
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState<T: Real> {
    descriptor: ManifoldDescriptor,
    positions: Vec<ManifoldPoint<T>>,
    estimators: Option<Vec<DMatrix<T>>>,
}

impl<T: Real> SwarmState<T> {
    pub fn new(positions: Vec<ManifoldPoint<T>>) -> Result<Self> {
        let descriptor = positions.first().ok_or(Error::Empty("swarm without agents"))?.descriptor();
        if let Some(bad) = positions.iter().find(|p| p.descriptor() != descriptor) {
            return Err(Error::DimensionMismatch {
                expected: descriptor.to_string(),
                found: bad.descriptor().to_string(),
            });
        }
        Ok(Self { descriptor, positions, estimators: None })
    }

    pub fn with_estimators(mut self, estimators: Vec<DMatrix<T>>) -> Result<Self> {
        if estimators.len() != self.positions.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} estimators", self.positions.len()),
                found: format!("{} estimators", estimators.len()),
            });
        }
        for x in &estimators {
            self.descriptor.check_ambient(x)?;
        }
        self.estimators = Some(estimators);
        Ok(self)
    }

    pub fn without_estimators(mut self) -> Self {
        self.estimators = None;
        self
    }

    /// Circle agents at angles `offset + k·chi`, `k = 0..n`.
    pub fn circle_ring(n: usize, chi: T, offset: T) -> Result<Self> {
        Self::new((0..n).map(|k| ManifoldPoint::from_angle(offset + chi * lit::<T>(k as f64))).collect())
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        self.descriptor
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[ManifoldPoint<T>] {
        &self.positions
    }

    pub fn estimators(&self) -> Option<&[DMatrix<T>]> {
        self.estimators.as_deref()
    }

    pub fn centroid(&self) -> Centroid<T> {
        centroid_uniform(&self.positions).expect("swarm is nonempty with one descriptor")
    }

    /// `W = ½ Σ ‖x_k‖²`, zero without estimators.
    pub fn estimator_energy(&self) -> T {
        self.estimators.as_ref().map_or(T::zero(), |xs| {
            xs.iter().fold(T::zero(), |a, x| a + x.norm_squared()) * lit(0.5)
        })
    }

    pub(crate) fn check_graph(&self, g: &WeightedDigraph<T>) -> Result<()> {
        if g.n_vertices() != self.n_agents() {
            return Err(Error::DimensionMismatch {
                expected: format!("graph with {} vertices", self.n_agents()),
                found: format!("graph with {} vertices", g.n_vertices()),
            });
        }
        Ok(())
    }
}

/// `P_L = (1/2N²) Σ_k Σ_j a_jk ⟨y_j, y_k⟩`.
pub fn cost_pl<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>) -> Result<T> {
    s.check_graph(g)?;
    let n = s.n_agents();
    let a = g.adjacency();
    let ys = s.positions();
    let mut sum = T::zero();
    for k in 0..n {
        for j in 0..n {
            let w = a[(j, k)];
            if w != T::zero() {
                sum += w * frobenius_dot(ys[j].matrix(), ys[k].matrix());
            }
        }
    }
    Ok(sum / lit::<T>(2.0 * (n * n) as f64))
}

/// Laplacian form `ξ₂ − (1/2N²) Σ l_jk ⟨y_j, y_k⟩` with the in-Laplacian and
/// `ξ₂ = r²/(2N²) Σ d_k`.
pub fn cost_pl_laplacian<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>) -> Result<T> {
    s.check_graph(g)?;
    let n = s.n_agents();
    let l = g.laplacian(LaplacianKind::In);
    let ys = s.positions();
    let denom = lit::<T>(2.0 * (n * n) as f64);
    let r2 = s.descriptor().radius::<T>().powi(2);
    let xi2 = g.degrees().in_degrees.iter().fold(T::zero(), |a, &d| a + d) * r2 / denom;
    let mut quad = T::zero();
    for k in 0..n {
        for j in 0..n {
            let w = l[(j, k)];
            if w != T::zero() {
                quad += w * frobenius_dot(ys[j].matrix(), ys[k].matrix());
            }
        }
    }
    Ok(xi2 - quad / denom)
}

/// `P = ½ ‖C_e‖²`.
pub fn cost_p<T: Real>(s: &SwarmState<T>) -> T {
    s.centroid().matrix().norm_squared() * lit(0.5)
}

/// Largest pairwise chordal distance.
pub fn sync_error<T: Real>(s: &SwarmState<T>) -> T {
    let ys = s.positions();
    let mut worst = T::zero();
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            let d = (ys[i].matrix() - ys[j].matrix()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub fn is_synchronized<T: Real>(s: &SwarmState<T>, tol: T) -> bool {
    sync_error(s) <= tol
}

/// `b_k = Σ_j a_jk y_j` for every agent.
pub fn neighbor_sums<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>) -> Result<Vec<DMatrix<T>>> {
    s.check_graph(g)?;
    let n = s.n_agents();
    let (r, c) = s.descriptor().ambient_shape();
    let a = g.adjacency();
    Ok((0..n)
        .map(|k| {
            let mut b = DMatrix::zeros(r, c);
            for j in 0..n {
                let w = a[(j, k)];
                if w != T::zero() {
                    b += s.positions()[j].matrix() * w;
                }
            }
            b
        })
        .collect())
}

/// Every agent maximizes `⟨y_k, b_k⟩` up to `tol`.
pub fn is_consensus<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>, tol: T) -> Result<bool> {
    neighborhood_predicate(g, s, tol, false)
}

/// Every agent minimizes `⟨y_k, b_k⟩` up to `tol`.
pub fn is_anti_consensus<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>, tol: T) -> Result<bool> {
    neighborhood_predicate(g, s, tol, true)
}

fn neighborhood_predicate<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>, tol: T, anti: bool) -> Result<bool> {
    let desc = s.descriptor();
    for (y, b) in s.positions().iter().zip(neighbor_sums(g, s)?) {
        let mean = if anti { aiam(desc, &b)? } else { iam(desc, &b)? };
        if mean.degenerate_set == Degeneracy::WholeManifold {
            continue;
        }
        let value = iam_value(y, &b)?;
        let slack = if anti { value - mean.optimal_value } else { mean.optimal_value - value };
        if slack > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `⟨c, C_e⟩` is constant over the manifold: `C_e = 0` on the circle
/// and SO(n), `C_e = (p/n) I` on Grass(p, n).
pub fn is_balanced_config<T: Real>(s: &SwarmState<T>, tol: T) -> bool {
    balance_residual(s) <= tol
}

/// Distance of `C_e` from the balanced value.
pub fn balance_residual<T: Real>(s: &SwarmState<T>) -> T {
    let c = s.centroid();
    match s.descriptor() {
        ManifoldDescriptor::Circle | ManifoldDescriptor::SpecialOrthogonal { .. } => c.norm(),
        ManifoldDescriptor::Grassmann { p, n } => {
            (c.matrix() - DMatrix::<T>::identity(n, n) * lit::<T>(p as f64 / n as f64)).norm()
        }
    }
}

/// `max_k ‖Proj_k(C_e)‖`: vanishes at equilibria of the complete-graph flow.
pub fn centroid_tangent_residual<T: Real>(s: &SwarmState<T>) -> T {
    let c = s.centroid();
    s.positions()
        .iter()
        .map(|y| s.descriptor().tangent_project_ambient(y.matrix(), c.matrix()).norm())
        .fold(T::zero(), |a, x| if x > a { x } else { a })
}
