//! Centroids, induced arithmetic means (IAM) and anti-means (AIAM).
//!
//! The IAM of weighted points is the set of maximizers of `⟨c, C_e⟩` over the
//! manifold, where `C_e` is the weighted centroid in the embedding space; the
//! AIAM is the set of minimizers, i.e. the IAM of `-C_e`. Each manifold has a
//! closed form:
//!
//! * circle: central projection `C_e / ‖C_e‖`;
//! * SO(n): polar factor of `C_e`, with the smallest singular direction
//!   flipped when `det C_e < 0`;
//! * Grass(p, n): projector onto the dominant `p`-eigenspace of `C_e`.
//!
//! Non-unique means return one canonical representative together with a
//! [`Degeneracy`] descriptor.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_dot, svd_desc, sym_eigen_desc};
use crate::manifolds::{ManifoldDescriptor, ManifoldPoint};
use crate::scalar::{lit, Real};

/// Relative tolerance on eigen- and singular-value gaps.
pub const GAP_TOL: f64 = 1e-9;
/// Centroids with `‖C_e‖ ≤ DEGENERATE_TOL · r_M` are treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-9;
/// Minimal gap between eigenvalues of `R` accepted by [`critical_rotations`].
pub const CRITICAL_GAP: f64 = 1e-6;

/// Weighted centroid of points in the embedding space.
#[derive(Clone, Debug, PartialEq)]
pub struct Centroid<T: Real> {
    descriptor: ManifoldDescriptor,
    c: DMatrix<T>,
    total_weight: T,
}

impl<T: Real> Centroid<T> {
    /// Wraps an arbitrary ambient matrix (total weight 1).
    pub fn from_matrix(descriptor: ManifoldDescriptor, c: DMatrix<T>) -> Result<Self> {
        descriptor.check_ambient(&c)?;
        Ok(Self { descriptor, c, total_weight: T::one() })
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        self.descriptor
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn total_weight(&self) -> T {
        self.total_weight
    }

    pub fn norm(&self) -> T {
        self.c.norm()
    }

    pub fn iam(&self) -> Result<MeanResult<T>> {
        iam(self.descriptor, &self.c)
    }

    pub fn aiam(&self) -> Result<MeanResult<T>> {
        aiam(self.descriptor, &self.c)
    }
}

/// `C_e = (1/W) Σ w_k y_k` with `W = Σ w_k`.
pub fn centroid<T: Real>(points: &[ManifoldPoint<T>], weights: &[T]) -> Result<Centroid<T>> {
    let first = points.first().ok_or(Error::Empty("centroid of no points"))?;
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights", points.len()),
            found: format!("{} weights", weights.len()),
        });
    }
    let descriptor = first.descriptor();
    let (r, c) = descriptor.ambient_shape();
    for (pt, &w) in points.iter().zip(weights) {
        if pt.descriptor() != descriptor {
            return Err(Error::DimensionMismatch {
                expected: descriptor.to_string(),
                found: pt.descriptor().to_string(),
            });
        }
        if !(w > T::zero()) {
            return Err(Error::InvalidWeight(format!("centroid weights must be positive, got {:?}", w)));
        }
    }
    // Sorted summation makes the result independent of input order.
    let sorted_sum = |mut terms: Vec<T>| {
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        terms.into_iter().fold(T::zero(), |a, x| a + x)
    };
    let total = sorted_sum(weights.to_vec());
    let sum = DMatrix::from_fn(r, c, |i, j| sorted_sum(points.iter().zip(weights).map(|(p, &w)| p.matrix()[(i, j)] * w).collect()));
    Ok(Centroid { descriptor, c: sum / total, total_weight: total })
}

/// Centroid with unit weights.
pub fn centroid_uniform<T: Real>(points: &[ManifoldPoint<T>]) -> Result<Centroid<T>> {
    centroid(points, &vec![T::one(); points.len()])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    None,
    WholeManifold,
    /// A proper family of optimizers, described in words.
    Subset(String),
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "none"),
            Self::WholeManifold => write!(f, "whole manifold"),
            Self::Subset(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanResult<T: Real> {
    pub representative: ManifoldPoint<T>,
    pub unique: bool,
    pub degenerate_set: Degeneracy,
    /// `⟨representative, C_e⟩`: the maximum for an IAM, the minimum for an AIAM.
    pub optimal_value: T,
}

impl<T: Real> MeanResult<T> {
    fn unique(representative: ManifoldPoint<T>, optimal_value: T) -> Self {
        Self { representative, unique: true, degenerate_set: Degeneracy::None, optimal_value }
    }

    fn degenerate(representative: ManifoldPoint<T>, optimal_value: T, set: Degeneracy) -> Self {
        Self { representative, unique: false, degenerate_set: set, optimal_value }
    }

    fn negate_value(mut self) -> Self {
        self.optimal_value = -self.optimal_value;
        self
    }
}

/// `⟨c, C_e⟩` in the embedding space (trace form for matrices).
pub fn iam_value<T: Real>(c: &ManifoldPoint<T>, ce: &DMatrix<T>) -> Result<T> {
    c.descriptor().check_ambient(ce)?;
    Ok(frobenius_dot(c.matrix(), ce))
}

/// Maximizers of `⟨c, C_e⟩` over the manifold.
pub fn iam<T: Real>(desc: ManifoldDescriptor, ce: &DMatrix<T>) -> Result<MeanResult<T>> {
    desc.validate()?;
    desc.check_ambient(ce)?;
    match desc {
        ManifoldDescriptor::Circle => Ok(iam_circle(ce)),
        ManifoldDescriptor::SpecialOrthogonal { .. } => iam_so_n(ce),
        ManifoldDescriptor::Grassmann { p, .. } => iam_grassmann(ce, p),
    }
}

/// Minimizers of `⟨c, C_e⟩`; `optimal_value` is the minimum.
pub fn aiam<T: Real>(desc: ManifoldDescriptor, ce: &DMatrix<T>) -> Result<MeanResult<T>> {
    Ok(iam(desc, &(-ce))?.negate_value())
}

pub fn iam_circle<T: Real>(ce: &DMatrix<T>) -> MeanResult<T> {
    let norm = ce.norm();
    if norm <= lit(DEGENERATE_TOL) {
        return MeanResult::degenerate(ManifoldPoint::from_angle(T::zero()), norm, Degeneracy::WholeManifold);
    }
    let rep = ManifoldPoint::from_trusted(ManifoldDescriptor::Circle, ce / norm);
    MeanResult::unique(rep, norm)
}

pub fn iam_so_n<T: Real>(ce: &DMatrix<T>) -> Result<MeanResult<T>> {
    let n = ce.nrows();
    let desc = ManifoldDescriptor::special_orthogonal(n)?;
    desc.check_ambient(ce)?;
    let scale = ce.norm();
    if scale <= lit::<T>(DEGENERATE_TOL) * desc.radius::<T>() {
        let id = ManifoldPoint::from_trusted(desc, DMatrix::identity(n, n));
        let value = ce.trace();
        return Ok(MeanResult::degenerate(id, value, Degeneracy::WholeManifold));
    }
    let tol = lit::<T>(GAP_TOL) * scale;
    let (mut u, s, v) = svd_desc(ce);
    let total: T = s.iter().fold(T::zero(), |a, &x| a + x);
    let d = u.determinant() * v.determinant();
    if d > T::zero() {
        let q = &u * v.transpose();
        let rep = ManifoldPoint::from_trusted(desc, q);
        if s[n - 2] > tol {
            Ok(MeanResult::unique(rep, total))
        } else {
            let zeros = s.iter().filter(|&&x| x <= tol).count();
            Ok(MeanResult::degenerate(
                rep,
                total,
                Degeneracy::Subset(format!(
                    "rotations U·diag(·)·Vᵀ free on the {zeros}-dimensional null space of C_e"
                )),
            ))
        }
    } else {
        u.column_mut(n - 1).neg_mut();
        let q = &u * v.transpose();
        let value = total - s[n - 1] * lit(2.0);
        let rep = ManifoldPoint::from_trusted(desc, q);
        if s[n - 2] - s[n - 1] > tol {
            Ok(MeanResult::unique(rep, value))
        } else {
            let mult = s.iter().filter(|&&x| x - s[n - 1] <= tol).count();
            Ok(MeanResult::degenerate(
                rep,
                value,
                Degeneracy::Subset(format!(
                    "family U·H·J·Hᵀ with the flip J ranging over the {mult}-fold smallest eigenspace of R"
                )),
            ))
        }
    }
}

pub fn iam_grassmann<T: Real>(ce: &DMatrix<T>, p: usize) -> Result<MeanResult<T>> {
    let n = ce.nrows();
    let desc = ManifoldDescriptor::grassmann(p, n)?;
    desc.check_ambient(ce)?;
    let scale = ce.norm();
    let asym = (ce - ce.transpose()).norm();
    let sym_tol = lit::<T>(1e-9) * max_one(scale);
    if asym > sym_tol {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    let (vals, vecs) = sym_eigen_desc(ce);
    let y = vecs.columns(0, p).into_owned();
    let rep = ManifoldPoint::from_trusted(desc, &y * y.transpose());
    let value = vals.iter().take(p).fold(T::zero(), |a, &x| a + x);
    let tol = lit::<T>(GAP_TOL) * scale;
    if scale <= lit::<T>(DEGENERATE_TOL) * desc.radius::<T>() || vals[0] - vals[n - 1] <= tol {
        return Ok(MeanResult::degenerate(rep, value, Degeneracy::WholeManifold));
    }
    if vals[p - 1] - vals[p] > tol {
        Ok(MeanResult::unique(rep, value))
    } else {
        let lo = vals.iter().filter(|&&x| x - vals[p - 1] > tol).count();
        let mult = vals.iter().filter(|&&x| (x - vals[p - 1]).abs() <= tol).count();
        Ok(MeanResult::degenerate(
            rep,
            value,
            Degeneracy::Subset(format!(
                "top {lo} eigenvectors plus any {}-dimensional subspace of a {mult}-fold eigenspace",
                p - lo
            )),
        ))
    }
}

fn max_one<T: Real>(x: T) -> T {
    if x > T::one() {
        x
    } else {
        T::one()
    }
}

/// Every rotation `Q` with `QᵀB` symmetric, for `B` whose polar factor
/// `R = (BᵀB)^{1/2}` has simple spectrum. The points are `U·H·J·Hᵀ` where
/// `B = U·R`, `R = H·Σ·Hᵀ`, and `J` runs over the sign matrices whose
/// determinant makes `det Q = +1` (2ⁿ⁻¹ points).
pub fn critical_rotations<T: Real>(b: &DMatrix<T>) -> Result<Vec<ManifoldPoint<T>>> {
    let n = b.nrows();
    let desc = ManifoldDescriptor::special_orthogonal(n)?;
    desc.check_ambient(b)?;
    let (u, s, v) = svd_desc(b);
    let gap = lit::<T>(CRITICAL_GAP);
    for i in 0..n - 1 {
        if s[i] - s[i + 1] < gap {
            return Err(Error::DegenerateSpectrum(format!(
                "eigenvalues {} and {} of R differ by {:e}; the critical set is a continuum",
                i,
                i + 1,
                (s[i] - s[i + 1]).as_f64()
            )));
        }
    }
    Ok(enumerate_sign_patterns(desc, &u, &v))
}

/// Critical rotations of `B` obtained by fixing the canonical eigenbasis of
/// `R` even when its spectrum is repeated. For repeated eigenvalues this is
/// a finite subset of a continuum of critical points.
pub fn critical_rotations_in_eigenbasis<T: Real>(b: &DMatrix<T>) -> Result<Vec<ManifoldPoint<T>>> {
    let n = b.nrows();
    let desc = ManifoldDescriptor::special_orthogonal(n)?;
    desc.check_ambient(b)?;
    let (u_s, s, v_s) = svd_desc(b);
    if s[n - 1] <= T::default_epsilon() * max_one(s[0]) {
        return Err(Error::Rank("B is singular; its polar factor is not unique".into()));
    }
    let polar = &u_s * v_s.transpose();
    let r = &v_s * DMatrix::from_diagonal(&s) * v_s.transpose();
    let (_, h) = sym_eigen_desc(&r);
    Ok(enumerate_sign_patterns(desc, &(&polar * &h), &h))
}

/// `Q = L·J·Hᵀ` for each sign matrix `J` giving `det Q = +1`.
fn enumerate_sign_patterns<T: Real>(desc: ManifoldDescriptor, l: &DMatrix<T>, h: &DMatrix<T>) -> Vec<ManifoldPoint<T>> {
    let n = l.nrows();
    let base_sign = l.determinant() * h.determinant() > T::zero();
    let mut out = Vec::with_capacity(1 << (n - 1));
    for mask in 0u64..(1u64 << n) {
        let flips = mask.count_ones() as usize;
        if (flips % 2 == 0) != base_sign {
            continue;
        }
        let mut lj = l.clone();
        for c in 0..n {
            if mask & (1 << c) != 0 {
                lj.column_mut(c).neg_mut();
            }
        }
        out.push(ManifoldPoint::from_trusted(desc, lj * h.transpose()));
    }
    out
}
