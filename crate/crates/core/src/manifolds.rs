//! The three concrete manifolds and their embedding geometry.
//!
//! | manifold      | ambient shape | radius |
//! |---------------|---------------|--------|
//! | circle S¹     | 2 × 1         | 1      |
//! | SO(n)         | n × n         | √n     |
//! | Grass(p, n)   | n × n         | √p     |
//!
//! Grassmann points are stored as rank-`p` orthogonal projectors; the
//! `n × p` orthonormal basis form ([`GrassmannBasis`]) is a computational
//! convenience that always round-trips to the projector.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{frobenius_dot, polar_orthonormal, sign_fix_columns, skew_part, svd_desc, sym_eigen_desc, symmetric_part};
use crate::scalar::{lit, membership_tol, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldDescriptor {
    Circle,
    SpecialOrthogonal { n: usize },
    Grassmann { p: usize, n: usize },
}

impl fmt::Display for ManifoldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Circle => write!(f, "S1"),
            Self::SpecialOrthogonal { n } => write!(f, "SO({n})"),
            Self::Grassmann { p, n } => write!(f, "Grass({p},{n})"),
        }
    }
}

impl ManifoldDescriptor {
    pub fn circle() -> Self {
        Self::Circle
    }

    pub fn special_orthogonal(n: usize) -> Result<Self> {
        let d = Self::SpecialOrthogonal { n };
        d.validate()?;
        Ok(d)
    }

    pub fn grassmann(p: usize, n: usize) -> Result<Self> {
        let d = Self::Grassmann { p, n };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Circle => Ok(()),
            Self::SpecialOrthogonal { n } if n >= 2 => Ok(()),
            Self::SpecialOrthogonal { n } => Err(Error::InvalidManifold(format!("SO(n) needs n >= 2, got {n}"))),
            Self::Grassmann { p, n } if p >= 1 && 2 * p <= n => Ok(()),
            Self::Grassmann { p, n } => Err(Error::InvalidManifold(format!(
                "Grass(p, n) needs 1 <= p <= n/2, got p = {p}, n = {n}"
            ))),
        }
    }

    /// Matrix layout of the embedding space.
    pub fn ambient_shape(&self) -> (usize, usize) {
        match *self {
            Self::Circle => (2, 1),
            Self::SpecialOrthogonal { n } | Self::Grassmann { n, .. } => (n, n),
        }
    }

    /// Dimension `m` of the embedding space.
    pub fn embedding_dim(&self) -> usize {
        let (r, c) = self.ambient_shape();
        r * c
    }

    /// Constant Euclidean norm of every embedded point.
    pub fn radius<T: Real>(&self) -> T {
        match *self {
            Self::Circle => T::one(),
            Self::SpecialOrthogonal { n } => lit::<T>(n as f64).sqrt(),
            Self::Grassmann { p, .. } => lit::<T>(p as f64).sqrt(),
        }
    }

    pub fn check_ambient<T: Real>(&self, m: &DMatrix<T>) -> Result<()> {
        let shape = self.ambient_shape();
        if m.shape() != shape {
            return Err(shape_mismatch(shape, m.shape()));
        }
        Ok(())
    }

    /// Ambient matrix from a row-major flat vector of length `m`.
    pub fn ambient_from_flat<T: Real>(&self, flat: &[T]) -> Result<DMatrix<T>> {
        let (r, c) = self.ambient_shape();
        if flat.len() != r * c {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", r * c),
                found: format!("{} entries", flat.len()),
            });
        }
        Ok(DMatrix::from_row_slice(r, c, flat))
    }

    /// Orthogonal projection of `v` onto the tangent space at `base`.
    /// Both arguments are ambient matrices; shapes are not checked.
    pub fn tangent_project_ambient<T: Real>(&self, base: &DMatrix<T>, v: &DMatrix<T>) -> DMatrix<T> {
        match *self {
            Self::Circle => {
                let radial = frobenius_dot(base, v);
                v - base * radial
            }
            Self::SpecialOrthogonal { .. } => base * skew_part(&(base.transpose() * v)),
            Self::Grassmann { .. } => {
                let m = symmetric_part(v);
                let pm = base * &m;
                let mp = &m * base;
                let pmp = &pm * base;
                pm + mp - pmp * lit::<T>(2.0)
            }
        }
    }

    /// Metric projection of an ambient matrix onto the manifold: normalization
    /// (circle), nearest rotation (SO(n)), dominant-`p` eigenprojector of the
    /// symmetric part (Grassmann).
    pub fn project_ambient<T: Real>(&self, m: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_ambient(m)?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Retraction("non-finite entries".into()));
        }
        match *self {
            Self::Circle => {
                let norm = m.norm();
                if norm <= T::default_epsilon() {
                    return Err(Error::Retraction("cannot normalize a zero vector onto the circle".into()));
                }
                Ok(m / norm)
            }
            Self::SpecialOrthogonal { n } => {
                let (mut u, s, v) = svd_desc(m);
                if s[0] <= T::zero() {
                    return Err(Error::Retraction("zero matrix has no nearest rotation".into()));
                }
                let mut q = &u * v.transpose();
                if q.determinant() < T::zero() {
                    u.column_mut(n - 1).neg_mut();
                    q = &u * v.transpose();
                }
                Ok(q)
            }
            Self::Grassmann { p, n } => {
                let (vals, vecs) = sym_eigen_desc(m);
                let half = lit::<T>(0.5);
                let tied = p < n && vals[p - 1] - vals[p] <= T::default_epsilon() * lit(16.0);
                if vals[p - 1] < half || (p < n && vals[p] > half) || tied {
                    return Err(Error::Retraction(format!(
                        "eigen-projection rank collapse: eigenvalues {:?} around position {p}",
                        vals.as_slice()
                    )));
                }
                let y = vecs.columns(0, p).into_owned();
                Ok(&y * y.transpose())
            }
        }
    }

    /// Largest violation of the manifold's defining equations.
    pub fn membership_violation<T: Real>(&self, m: &DMatrix<T>) -> T {
        if m.shape() != self.ambient_shape() {
            return T::max_value().unwrap_or_else(|| lit(f64::MAX));
        }
        match *self {
            Self::Circle => (m.norm() - T::one()).abs(),
            Self::SpecialOrthogonal { n } => {
                let orth = (m.transpose() * m - DMatrix::<T>::identity(n, n)).norm();
                if m.determinant() <= T::zero() {
                    RealField_max(orth, T::one())
                } else {
                    orth
                }
            }
            Self::Grassmann { p, .. } => {
                let sym = (m - m.transpose()).norm();
                let idem = (m * m - m).norm();
                let tr = (m.trace() - lit::<T>(p as f64)).abs();
                RealField_max(RealField_max(sym, idem), tr)
            }
        }
    }

    /// Haar-distributed (circle, SO(n)) or rotation-invariant (Grassmann)
    /// random point.
    pub fn random_point<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> ManifoldPoint<T> {
        let data = match *self {
            Self::Circle => {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                DMatrix::from_column_slice(2, 1, &[lit(theta.cos()), lit(theta.sin())])
            }
            Self::SpecialOrthogonal { n } => {
                let mut q = random_orthonormal::<T, R>(n, n, rng);
                if q.determinant() < T::zero() {
                    q.column_mut(0).neg_mut();
                }
                q
            }
            Self::Grassmann { p, n } => {
                let y = random_orthonormal::<T, R>(n, p, rng);
                &y * y.transpose()
            }
        };
        ManifoldPoint { descriptor: *self, data }
    }
}

#[allow(non_snake_case)]
fn RealField_max<T: Real>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

/// QR of a Gaussian matrix with the sign of R's diagonal absorbed into Q.
fn random_orthonormal<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<T> {
    let g = DMatrix::<T>::from_fn(rows, cols, |_, _| lit(rng.sample::<f64, _>(StandardNormal)));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        if r[(c, c)] < T::zero() {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// A point on one of the manifolds, stored in its embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint<T: Real> {
    descriptor: ManifoldDescriptor,
    data: DMatrix<T>,
}

impl<T: Real> ManifoldPoint<T> {
    /// Validates shape and membership (tolerance 1e-9 for `f64`).
    pub fn new(descriptor: ManifoldDescriptor, data: DMatrix<T>) -> Result<Self> {
        descriptor.validate()?;
        descriptor.check_ambient(&data)?;
        let violation = descriptor.membership_violation(&data);
        if !(violation <= membership_tol::<T>()) {
            return Err(Error::NotOnManifold(format!(
                "{descriptor}: invariant violation {:e}",
                violation.as_f64()
            )));
        }
        Ok(Self { descriptor, data })
    }

    /// Projects an arbitrary ambient matrix onto the manifold.
    pub fn project(descriptor: ManifoldDescriptor, ambient: &DMatrix<T>) -> Result<Self> {
        descriptor.validate()?;
        let data = descriptor.project_ambient(ambient)?;
        Ok(Self { descriptor, data })
    }

    pub(crate) fn from_trusted(descriptor: ManifoldDescriptor, data: DMatrix<T>) -> Self {
        Self { descriptor, data }
    }

    pub fn from_flat(descriptor: ManifoldDescriptor, flat: &[T]) -> Result<Self> {
        Self::new(descriptor, descriptor.ambient_from_flat(flat)?)
    }

    pub fn from_angle(theta: T) -> Self {
        Self {
            descriptor: ManifoldDescriptor::Circle,
            data: DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]),
        }
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(ManifoldDescriptor::special_orthogonal(n)?, DMatrix::identity(n, n))
    }

    /// Angle in (-π, π] of a circle point.
    pub fn angle(&self) -> Option<T> {
        matches!(self.descriptor, ManifoldDescriptor::Circle).then(|| {
            let a = self.data[1].atan2(self.data[0]);
            if a <= -T::pi() {
                a + T::two_pi()
            } else {
                a
            }
        })
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        self.descriptor
    }

    /// Embedding in matrix layout.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.data
    }

    /// Row-major flattening of the embedding (a vector of ℝ^m).
    pub fn embed(&self) -> Vec<T> {
        flatten_row_major(&self.data)
    }

    pub fn tangent_project(&self, v: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.descriptor.check_ambient(v)?;
        Ok(self.descriptor.tangent_project_ambient(&self.data, v))
    }

    /// Moves by `step · tangent` in the ambient space and projects back.
    pub fn retract(&self, tangent: &DMatrix<T>, step: T) -> Result<Self> {
        self.descriptor.check_ambient(tangent)?;
        if step == T::zero() {
            return Ok(self.clone());
        }
        let moved = &self.data + tangent * step;
        Self::project(self.descriptor, &moved)
    }

    /// Euclidean distance between the embeddings.
    pub fn chordal_distance(&self, other: &Self) -> Result<T> {
        if self.descriptor != other.descriptor {
            return Err(Error::DimensionMismatch {
                expected: self.descriptor.to_string(),
                found: other.descriptor.to_string(),
            });
        }
        Ok((&self.data - &other.data).norm())
    }

    pub fn membership_violation(&self) -> T {
        self.descriptor.membership_violation(&self.data)
    }
}

pub(crate) fn flatten_row_major<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

pub fn embed<T: Real>(pt: &ManifoldPoint<T>) -> Vec<T> {
    pt.embed()
}

pub fn tangent_project<T: Real>(base: &ManifoldPoint<T>, v: &DMatrix<T>) -> Result<DMatrix<T>> {
    base.tangent_project(v)
}

pub fn retract<T: Real>(base: &ManifoldPoint<T>, tangent: &DMatrix<T>, step: T) -> Result<ManifoldPoint<T>> {
    base.retract(tangent, step)
}

pub fn chordal_distance<T: Real>(a: &ManifoldPoint<T>, b: &ManifoldPoint<T>) -> Result<T> {
    a.chordal_distance(b)
}

/// Seeded random point (ChaCha8 stream, stable across platforms).
pub fn random_point<T: Real>(desc: ManifoldDescriptor, seed: u64) -> Result<ManifoldPoint<T>> {
    desc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(desc.random_point(&mut rng))
}

/// `n × p` matrix with orthonormal columns spanning a Grassmann point.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannBasis<T: Real> {
    y: DMatrix<T>,
}

impl<T: Real> GrassmannBasis<T> {
    pub fn new(y: DMatrix<T>) -> Result<Self> {
        let (n, p) = y.shape();
        ManifoldDescriptor::grassmann(p, n)?;
        let err = (y.transpose() * &y - DMatrix::<T>::identity(p, p)).norm();
        if !(err <= membership_tol::<T>()) {
            return Err(Error::NotOnManifold(format!("basis columns not orthonormal (error {:e})", err.as_f64())));
        }
        Ok(Self { y })
    }

    /// Orthonormalizes an arbitrary full-rank `n × p` matrix.
    pub fn orthonormalize(m: &DMatrix<T>) -> Result<Self> {
        let (q, s) = polar_orthonormal(m);
        let smallest = s[s.len() - 1];
        if !(smallest > T::default_epsilon() * s[0]) {
            return Err(Error::Rank("basis candidate is rank deficient".into()));
        }
        Self::new(q)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.y
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        let (n, p) = self.y.shape();
        ManifoldDescriptor::Grassmann { p, n }
    }
}

/// `Π = Y Yᵀ`.
pub fn basis_to_projector<T: Real>(basis: &GrassmannBasis<T>) -> ManifoldPoint<T> {
    let y = basis.matrix();
    ManifoldPoint::from_trusted(basis.descriptor(), y * y.transpose())
}

/// Orthonormal basis of the range of a rank-`p` projector.
pub fn projector_to_basis<T: Real>(pi: &ManifoldPoint<T>) -> Result<GrassmannBasis<T>> {
    let ManifoldDescriptor::Grassmann { p, .. } = pi.descriptor() else {
        return Err(Error::InvalidManifold(format!("{} is not a Grassmann manifold", pi.descriptor())));
    };
    let (vals, vecs) = sym_eigen_desc(pi.matrix());
    if vals[p - 1] < lit(0.5) {
        return Err(Error::Rank(format!(
            "projector has p-th eigenvalue {:e} < 0.5",
            vals[p - 1].as_f64()
        )));
    }
    let mut y = vecs.columns(0, p).into_owned();
    sign_fix_columns(&mut y);
    Ok(GrassmannBasis { y })
}

/// Principal angles between two subspaces, ascending (cosines descending).
pub fn principal_angles<T: Real>(a: &GrassmannBasis<T>, b: &GrassmannBasis<T>) -> Result<Vec<T>> {
    if a.matrix().shape() != b.matrix().shape() {
        return Err(shape_mismatch(a.matrix().shape(), b.matrix().shape()));
    }
    let m = a.matrix().transpose() * b.matrix();
    let (_, s, _) = svd_desc(&m);
    Ok(s.iter()
        .map(|&c| {
            let c = if c > T::one() { T::one() } else if c < T::zero() { T::zero() } else { c };
            c.acos()
        })
        .collect())
}
