//! Consensus, synchronization and balancing of agent swarms on compact
//! homogeneous manifolds: the circle, the rotation group SO(n) and the
//! Grassmann manifold Grass(p, n).
//!
//! Every manifold is handled through its embedding in a Euclidean space
//! where all points have the same norm. Means are induced arithmetic means
//! (maximizers of a linear function over the manifold), consensus costs are
//! graph-weighted sums of inner products, and all flows are projected
//! gradients integrated with a retraction.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); graph weights
//! are generic over [`Weight`], which also admits exact integer and rational
//! weights. The aliases below fix the common `f64` instantiation.

pub mod consensus;
pub mod dynamics;
pub mod error;
pub mod graph;
mod linalg;
pub mod manifolds;
pub mod means;
pub mod scalar;

pub use consensus::SwarmState;
pub use dynamics::{FlowSpec, GrassmannRepresentation, IntegratorConfig, Method, Metrics, Trajectory};
pub use error::{Error, Result};
pub use graph::{GraphSchedule, WeightedDigraph, Weight};
pub use manifolds::{GrassmannBasis, ManifoldDescriptor, ManifoldPoint};
pub use means::{Centroid, Degeneracy, MeanResult};
pub use scalar::Real;

/// Dense ambient matrix (the embedding space ℝ^m in matrix layout).
pub type Ambient<T> = nalgebra::DMatrix<T>;

pub type Point = ManifoldPoint<f64>;
pub type Basis = GrassmannBasis<f64>;
pub type Digraph = WeightedDigraph<f64>;
pub type Schedule = GraphSchedule<f64>;
pub type Swarm = SwarmState<f64>;
pub type Mean = MeanResult<f64>;
pub type Flow = FlowSpec<f64>;
pub type Config = IntegratorConfig<f64>;
pub type Run = Trajectory<f64>;

/// Graph with exact rational weights.
pub type RationalDigraph = WeightedDigraph<num_rational::Rational64>;
pub type RationalSchedule = GraphSchedule<num_rational::Rational64>;
