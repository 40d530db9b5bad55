//! Right-hand sides of the continuous-time protocols.
//!
//! Position derivatives are returned as ambient tangent vectors unless the
//! function name says otherwise (angles, body velocities, basis velocities).

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::consensus::SwarmState;
use crate::error::{Error, Result};
use crate::graph::WeightedDigraph;
use crate::manifolds::{ManifoldDescriptor, ManifoldPoint};
use crate::means::iam;
use crate::scalar::{lit, Real};

fn check_len<T: Real>(g: &WeightedDigraph<T>, n: usize) -> Result<()> {
    if g.n_vertices() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("graph with {n} vertices"),
            found: format!("graph with {} vertices", g.n_vertices()),
        });
    }
    Ok(())
}

/// `α · Proj_k(Σ_j (a_jk + a_kj)(y_j − y_k))`: the projected gradient of
/// `2N²α · P_L`.
pub fn gradient_rhs<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>, alpha: T) -> Result<Vec<DMatrix<T>>> {
    s.check_graph(g)?;
    let a = g.adjacency();
    let sym = (a + a.transpose()) * lit::<T>(0.5);
    let ys: Vec<DMatrix<T>> = s.positions().iter().map(|p| p.matrix().clone()).collect();
    Ok(consensus_field(s.descriptor(), &sym, &ys, alpha))
}

/// `2α · Proj_k(Σ_j a_jk (y_j − y_k))` with in-neighbour weights. Equal to
/// [`gradient_rhs`] on undirected graphs and used verbatim on directed ones.
pub fn consensus_rhs<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>, alpha: T) -> Result<Vec<DMatrix<T>>> {
    s.check_graph(g)?;
    let ys: Vec<DMatrix<T>> = s.positions().iter().map(|p| p.matrix().clone()).collect();
    Ok(consensus_field(s.descriptor(), g.adjacency(), &ys, alpha))
}

/// `Σ_j a_jk (y_j − y_k)` for every `k`.
pub(crate) fn in_neighbour_differences<T: Real>(a: &DMatrix<T>, xs: &[DMatrix<T>]) -> Vec<DMatrix<T>> {
    let n = xs.len();
    (0..n)
        .map(|k| {
            let mut acc = DMatrix::zeros(xs[k].nrows(), xs[k].ncols());
            for j in 0..n {
                let w = a[(j, k)];
                if w != T::zero() {
                    acc += (&xs[j] - &xs[k]) * w;
                }
            }
            acc
        })
        .collect()
}

pub(crate) fn consensus_field<T: Real>(
    desc: ManifoldDescriptor,
    a: &DMatrix<T>,
    ys: &[DMatrix<T>],
    alpha: T,
) -> Vec<DMatrix<T>> {
    let two_alpha = alpha * lit(2.0);
    in_neighbour_differences(a, ys)
        .into_iter()
        .zip(ys)
        .map(|(v, y)| desc.tangent_project_ambient(y, &v) * two_alpha)
        .collect()
}

/// Phase velocities `θ̇_k = 2α Σ_j a_jk sin(θ_j − θ_k)`.
pub fn circle_rhs<T: Real>(g: &WeightedDigraph<T>, thetas: &[T], alpha: T) -> Result<Vec<T>> {
    check_len(g, thetas.len())?;
    let a = g.adjacency();
    let n = thetas.len();
    Ok((0..n)
        .map(|k| {
            let s = (0..n).fold(T::zero(), |acc, j| acc + a[(j, k)] * (thetas[j] - thetas[k]).sin());
            s * alpha * lit(2.0)
        })
        .collect())
}

/// Body velocities `Ω_k = Q_kᵀ Q̇_k = α Σ_j a_jk (Q_kᵀ Q_j − Q_jᵀ Q_k)`.
pub fn so_n_rhs<T: Real>(g: &WeightedDigraph<T>, qs: &[DMatrix<T>], alpha: T) -> Result<Vec<DMatrix<T>>> {
    check_len(g, qs.len())?;
    let a = g.adjacency();
    let n = qs.len();
    Ok((0..n)
        .map(|k| {
            let mut acc = DMatrix::zeros(qs[k].nrows(), qs[k].ncols());
            for j in 0..n {
                let w = a[(j, k)];
                if w != T::zero() {
                    let rel = qs[k].transpose() * &qs[j];
                    acc += (&rel - rel.transpose()) * w;
                }
            }
            acc * alpha
        })
        .collect())
}

/// `Π̇_k = 2α Σ_j a_jk (Π_k Π_j Π_⊥k + Π_⊥k Π_j Π_k)`.
pub fn grassmann_projector_rhs<T: Real>(g: &WeightedDigraph<T>, pis: &[DMatrix<T>], alpha: T) -> Result<Vec<DMatrix<T>>> {
    check_len(g, pis.len())?;
    let a = g.adjacency();
    let n = pis.len();
    Ok((0..n)
        .map(|k| {
            let dim = pis[k].nrows();
            let perp = DMatrix::<T>::identity(dim, dim) - &pis[k];
            let mut acc = DMatrix::zeros(dim, dim);
            for j in 0..n {
                let w = a[(j, k)];
                if w != T::zero() {
                    let mid = &pis[k] * &pis[j] * &perp;
                    acc += (&mid + mid.transpose()) * w;
                }
            }
            acc * (alpha * lit::<T>(2.0))
        })
        .collect())
}

/// Basis velocities `Ẏ_k = 2α Σ_j a_jk (Y_j M − Y_k MᵀM)` with
/// `M = Y_jᵀ Y_k`, i.e. `2α Σ_j a_jk Π_⊥k Π_j Y_k`. The induced projector
/// velocity `Ẏ_k Y_kᵀ + Y_k Ẏ_kᵀ` equals [`grassmann_projector_rhs`].
pub fn grassmann_basis_rhs<T: Real>(g: &WeightedDigraph<T>, ys: &[DMatrix<T>], alpha: T) -> Result<Vec<DMatrix<T>>> {
    check_len(g, ys.len())?;
    Ok(basis_field(g.adjacency(), ys, alpha))
}

pub(crate) fn basis_field<T: Real>(a: &DMatrix<T>, ys: &[DMatrix<T>], alpha: T) -> Vec<DMatrix<T>> {
    let n = ys.len();
    (0..n)
        .map(|k| {
            let mut acc = DMatrix::zeros(ys[k].nrows(), ys[k].ncols());
            for j in 0..n {
                let w = a[(j, k)];
                if w != T::zero() {
                    let m = ys[j].transpose() * &ys[k];
                    acc += (&ys[j] * &m - &ys[k] * (m.transpose() * &m)) * w;
                }
            }
            acc * (alpha * lit::<T>(2.0))
        })
        .collect()
}

fn estimators_of<T: Real>(s: &SwarmState<T>) -> Result<&[DMatrix<T>]> {
    s.estimators().ok_or(Error::MissingEstimators)
}

/// Synchronization with estimators: `ẋ_k = β Σ_j a_jk (x_j − x_k)` and
/// `ẏ_k = γ_S Proj_k(x_k)`. Returns `(ẋ, ẏ)`.
pub fn estimator_sync_rhs<T: Real>(
    g: &WeightedDigraph<T>,
    s: &SwarmState<T>,
    beta: T,
    gamma_s: T,
) -> Result<(Vec<DMatrix<T>>, Vec<DMatrix<T>>)> {
    s.check_graph(g)?;
    let xs = estimators_of(s)?;
    let desc = s.descriptor();
    let xdot = in_neighbour_differences(g.adjacency(), xs).into_iter().map(|v| v * beta).collect();
    let ydot = s
        .positions()
        .iter()
        .zip(xs)
        .map(|(y, x)| desc.tangent_project_ambient(y.matrix(), x) * gamma_s)
        .collect();
    Ok((xdot, ydot))
}

/// Anti-consensus with estimators: `ẏ_k = γ_B Proj_k(x_k)` and
/// `ẋ_k = β Σ_j a_jk (x_j − x_k) + ẏ_k`. Returns `(ẋ, ẏ)`.
pub fn estimator_anti_rhs<T: Real>(
    g: &WeightedDigraph<T>,
    s: &SwarmState<T>,
    beta: T,
    gamma_b: T,
) -> Result<(Vec<DMatrix<T>>, Vec<DMatrix<T>>)> {
    let (consensus, ydot) = estimator_sync_rhs(g, s, beta, gamma_b)?;
    let xdot = consensus.into_iter().zip(&ydot).map(|(c, y)| c + y).collect();
    Ok((xdot, ydot))
}

/// Relative attitudes `Q_kᵀ Q_j` measured by agent `k` along each edge `j → k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelativeAttitudes<T: Real> {
    by_edge: BTreeMap<(usize, usize), DMatrix<T>>,
}

impl<T: Real> RelativeAttitudes<T> {
    pub fn new() -> Self {
        Self { by_edge: BTreeMap::new() }
    }

    /// Measurements for exactly the edges of `g`.
    pub fn measure(g: &WeightedDigraph<T>, qs: &[DMatrix<T>]) -> Result<Self> {
        check_len(g, qs.len())?;
        let mut out = Self::new();
        let n = qs.len();
        for k in 0..n {
            for j in 0..n {
                if g.has_edge(j, k) {
                    out.insert(j, k, qs[k].transpose() * &qs[j]);
                }
            }
        }
        Ok(out)
    }

    /// Records `Q_kᵀ Q_j` for the edge `from = j → to = k`.
    pub fn insert(&mut self, from: usize, to: usize, rel: DMatrix<T>) {
        self.by_edge.insert((from, to), rel);
    }

    pub fn get(&self, from: usize, to: usize) -> Option<&DMatrix<T>> {
        self.by_edge.get(&(from, to))
    }

    pub fn len(&self) -> usize {
        self.by_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_edge.is_empty()
    }
}

/// Estimator synchronization on SO(n) written in body frames `Z_k = Q_kᵀ X_k`:
///
/// `Ω_k = (γ_S/2)(Z_k − Z_kᵀ)`,
/// `Ż_k = Ω_kᵀ Z_k + β Σ_j a_jk ((Q_kᵀ Q_j) Z_j − Z_k)`.
///
/// Only relative attitudes along existing edges are used. Returns
/// `(Ż, Ω)`.
pub fn local_frame_son_rhs<T: Real>(
    g: &WeightedDigraph<T>,
    zs: &[DMatrix<T>],
    rel: &RelativeAttitudes<T>,
    beta: T,
    gamma_s: T,
) -> Result<(Vec<DMatrix<T>>, Vec<DMatrix<T>>)> {
    check_len(g, zs.len())?;
    let n = zs.len();
    let a = g.adjacency();
    let half_gamma = gamma_s * lit(0.5);
    let omegas: Vec<DMatrix<T>> = zs.iter().map(|z| (z - z.transpose()) * half_gamma).collect();
    let mut zdots = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = omegas[k].transpose() * &zs[k];
        for j in 0..n {
            let w = a[(j, k)];
            if w != T::zero() {
                let r = rel.get(j, k).ok_or(Error::MissingRelativePosition { from: j, to: k })?;
                acc += (r * &zs[j] - &zs[k]) * (w * beta);
            }
        }
        zdots.push(acc);
    }
    Ok((zdots, omegas))
}

/// One discrete step: every agent jumps to the IAM of its in-neighbours and
/// itself (self weight one). Agents whose IAM is not unique stay put.
pub fn vicsek_step<T: Real>(g: &WeightedDigraph<T>, s: &SwarmState<T>) -> Result<SwarmState<T>> {
    s.check_graph(g)?;
    let desc = s.descriptor();
    let n = s.n_agents();
    let a = g.adjacency();
    let ys = s.positions();
    let mut next: Vec<ManifoldPoint<T>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut c = ys[k].matrix().clone();
        for j in 0..n {
            let w = a[(j, k)];
            if w != T::zero() {
                c += ys[j].matrix() * w;
            }
        }
        let mean = iam(desc, &c)?;
        next.push(if mean.unique { mean.representative } else { ys[k].clone() });
    }
    let out = SwarmState::new(next)?;
    match s.estimators() {
        Some(xs) => out.with_estimators(xs.to_vec()),
        None => Ok(out),
    }
}
