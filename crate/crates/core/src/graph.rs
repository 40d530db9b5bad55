//! Weighted digraphs, Laplacians, connectivity and piecewise-constant
//! graph schedules.
//!
//! Adjacency convention: `a[(j, k)]` is the weight of the edge `j ⇝ k`
//! (row = sender, column = receiver), with a zero diagonal.

use std::collections::VecDeque;
use std::fmt::Debug;

use nalgebra::DMatrix;
use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Edge weight type. Exact types compare degrees exactly; floating types use
/// [`Weight::balance_tolerance`].
pub trait Weight: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// Absolute tolerance for in/out degree comparison.
    fn balance_tolerance() -> Self {
        Self::zero()
    }

    fn as_f64(self) -> f64;
}

impl Weight for f64 {
    fn balance_tolerance() -> Self {
        1.0e-12
    }
    fn as_f64(self) -> f64 {
        self
    }
}

impl Weight for f32 {
    fn balance_tolerance() -> Self {
        1.0e-6
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

macro_rules! exact_weight {
    ($($t:ty),*) => {$(
        impl Weight for $t {
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    )*};
}
exact_weight!(i32, i64, u32, u64);

macro_rules! rational_weight {
    ($($t:ty),*) => {$(
        impl Weight for Ratio<$t> {
            fn as_f64(self) -> f64 {
                self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
            }
        }
    )*};
}
rational_weight!(i32, i64);

fn abs_diff<W: Weight>(a: W, b: W) -> W {
    if a > b {
        a - b
    } else {
        b - a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianKind {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Degrees<W> {
    pub in_degrees: Vec<W>,
    pub out_degrees: Vec<W>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphClass {
    pub is_undirected: bool,
    pub is_bidirectional: bool,
    pub is_balanced: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Connectivity {
    pub strongly_connected: bool,
    pub weakly_connected: bool,
}

/// A weighted directed graph on `n` vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedDigraph<W: Weight> {
    adjacency: DMatrix<W>,
}

impl<W: Weight> WeightedDigraph<W> {
    /// Builds a graph from a square adjacency matrix; rejects negative weights
    /// and self-loops.
    pub fn from_adjacency(adjacency: DMatrix<W>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if adjacency.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "adjacency must be square, got {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        for j in 0..n {
            for k in 0..n {
                let a = adjacency[(j, k)];
                if a < W::zero() {
                    return Err(Error::InvalidGraph(format!("negative weight a[{j}][{k}] = {a:?}")));
                }
                if j == k && a != W::zero() {
                    return Err(Error::InvalidGraph(format!("self-loop at vertex {k}")));
                }
            }
        }
        Ok(Self { adjacency })
    }

    pub fn from_rows(rows: &[Vec<W>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGraph("adjacency rows must all have length N".into()));
        }
        Self::from_adjacency(DMatrix::from_fn(n, n, |j, k| rows[j][k]))
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_adjacency(DMatrix::from_element(n, n, W::zero()))
    }

    /// Complete graph with weight `w` on every ordered pair.
    pub fn complete(n: usize, w: W) -> Result<Self> {
        check_generator(n, w)?;
        Self::from_adjacency(DMatrix::from_fn(n, n, |j, k| if j == k { W::zero() } else { w }))
    }

    /// Undirected cycle `0 - 1 - ... - (n-1) - 0`.
    pub fn ring_undirected(n: usize, w: W) -> Result<Self> {
        check_generator(n, w)?;
        let mut a = DMatrix::from_element(n, n, W::zero());
        if n >= 2 {
            for k in 0..n {
                let next = (k + 1) % n;
                if next != k {
                    a[(k, next)] = w;
                    a[(next, k)] = w;
                }
            }
        }
        Self::from_adjacency(a)
    }

    /// Directed cycle `0 ⇝ 1 ⇝ ... ⇝ (n-1) ⇝ 0`.
    pub fn directed_cycle(n: usize, w: W) -> Result<Self> {
        check_generator(n, w)?;
        let mut a = DMatrix::from_element(n, n, W::zero());
        if n >= 2 {
            for k in 0..n {
                a[(k, (k + 1) % n)] = w;
            }
        }
        Self::from_adjacency(a)
    }

    /// Each off-diagonal entry is independently 1 with probability `p`.
    pub fn random_digraph(n: usize, p: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_digraph_with(n, p, &mut rng)
    }

    pub fn random_digraph_with<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidGraph(format!("edge probability {p} outside [0, 1]")));
        }
        let mut a = DMatrix::from_element(n, n, W::zero());
        for j in 0..n {
            for k in 0..n {
                if j != k && rng.random_bool(p) {
                    a[(j, k)] = W::one();
                }
            }
        }
        Self::from_adjacency(a)
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<W> {
        &self.adjacency
    }

    /// Weight of the edge `j ⇝ k`.
    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> W {
        self.adjacency[(j, k)]
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.adjacency[(j, k)] != W::zero()
    }

    /// Weights of all edges `j ⇝ k` into `k`, as `(j, a_jk)`.
    pub fn in_edges(&self, k: usize) -> impl Iterator<Item = (usize, W)> + '_ {
        (0..self.n_vertices()).filter_map(move |j| {
            let a = self.adjacency[(j, k)];
            (a != W::zero()).then_some((j, a))
        })
    }

    pub fn degrees(&self) -> Degrees<W> {
        let n = self.n_vertices();
        let in_degrees = (0..n)
            .map(|k| (0..n).fold(W::zero(), |s, j| s + self.adjacency[(j, k)]))
            .collect();
        let out_degrees = (0..n)
            .map(|k| (0..n).fold(W::zero(), |s, j| s + self.adjacency[(k, j)]))
            .collect();
        Degrees { in_degrees, out_degrees }
    }

    /// `L = D - A` with in-degrees (zero column sums) or out-degrees (zero
    /// row sums) on the diagonal.
    pub fn laplacian(&self, kind: LaplacianKind) -> DMatrix<W> {
        let d = self.degrees();
        let deg = match kind {
            LaplacianKind::In => d.in_degrees,
            LaplacianKind::Out => d.out_degrees,
        };
        let n = self.n_vertices();
        DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                deg[k] - self.adjacency[(j, k)]
            } else {
                W::zero() - self.adjacency[(j, k)]
            }
        })
    }

    pub fn classify(&self) -> GraphClass {
        let n = self.n_vertices();
        let mut undirected = true;
        let mut bidirectional = true;
        for j in 0..n {
            for k in 0..n {
                let (a, b) = (self.adjacency[(j, k)], self.adjacency[(k, j)]);
                undirected &= a == b;
                bidirectional &= (a != W::zero()) == (b != W::zero());
            }
        }
        let d = self.degrees();
        let tol = W::balance_tolerance();
        let balanced = d
            .in_degrees
            .iter()
            .zip(&d.out_degrees)
            .all(|(&i, &o)| abs_diff(i, o) <= tol);
        GraphClass {
            is_undirected: undirected,
            is_bidirectional: bidirectional,
            is_balanced: balanced,
        }
    }

    /// Vertices reachable from `root` along directed edges.
    pub fn reachable_from(&self, root: usize) -> Vec<bool> {
        self.bfs(root, |j, k| self.has_edge(j, k))
    }

    /// Whether `root` reaches every vertex along directed edges.
    pub fn reaches_all(&self, root: usize) -> bool {
        self.reachable_from(root).into_iter().all(|r| r)
    }

    pub fn connectivity(&self) -> Connectivity {
        let forward = self.bfs(0, |j, k| self.has_edge(j, k));
        let backward = self.bfs(0, |j, k| self.has_edge(k, j));
        let weak = self.bfs(0, |j, k| self.has_edge(j, k) || self.has_edge(k, j));
        Connectivity {
            strongly_connected: forward.iter().all(|&r| r) && backward.iter().all(|&r| r),
            weakly_connected: weak.iter().all(|&r| r),
        }
    }

    fn bfs(&self, root: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(j) = queue.pop_front() {
            for k in 0..n {
                if !seen[k] && edge(j, k) {
                    seen[k] = true;
                    queue.push_back(k);
                }
            }
        }
        seen
    }

    /// Smallest positive weight, if any edge exists.
    pub fn min_positive_weight(&self) -> Option<W> {
        self.adjacency
            .iter()
            .copied()
            .filter(|&a| a > W::zero())
            .fold(None, |m, a| match m {
                Some(b) if b <= a => Some(b),
                _ => Some(a),
            })
    }

    /// Converts weights into another weight type.
    pub fn map_weights<V: Weight>(&self, f: impl Fn(W) -> V) -> WeightedDigraph<V> {
        WeightedDigraph {
            adjacency: self.adjacency.map(f),
        }
    }
}

fn check_generator<W: Weight>(n: usize, w: W) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
    }
    if w <= W::zero() {
        return Err(Error::InvalidGraph(format!("generator weight must be positive, got {w:?}")));
    }
    Ok(())
}

/// One constant piece of a schedule, active from `start` until the next
/// segment's start (or the schedule end).
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<W: Weight> {
    pub start: W,
    pub graph: WeightedDigraph<W>,
}

/// Outcome of a uniform-connectivity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformConnectivity {
    pub connected: bool,
    /// Lowest-index vertex that reaches everyone in every window.
    pub root: Option<usize>,
}

/// Piecewise-constant time-varying graph.
///
/// The segments cover `[segments[0].start, end)`. A periodic schedule
/// repeats that pattern forever and covers `[segments[0].start, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSchedule<W: Weight> {
    segments: Vec<Segment<W>>,
    end: W,
    periodic: bool,
    delta: W,
    horizon: W,
}

impl<W: Weight> GraphSchedule<W> {
    pub fn new(segments: Vec<Segment<W>>, end: W, periodic: bool, delta: W, horizon: W) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("schedule needs at least one segment".into()))?;
        if delta <= W::zero() {
            return Err(Error::InvalidSchedule(format!("delta must be positive, got {delta:?}")));
        }
        if horizon <= W::zero() {
            return Err(Error::InvalidSchedule(format!("horizon must be positive, got {horizon:?}")));
        }
        let n = first.graph.n_vertices();
        for (i, w) in segments.windows(2).enumerate() {
            if w[1].start <= w[0].start {
                return Err(Error::InvalidSchedule(format!(
                    "segment start times must increase strictly (segment {})",
                    i + 1
                )));
            }
        }
        let last = segments.last().expect("nonempty");
        if end <= last.start {
            return Err(Error::InvalidSchedule(format!(
                "schedule end {end:?} must lie after the last segment start {:?}",
                last.start
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.graph.n_vertices() != n {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has {} vertices, expected {n}",
                    s.graph.n_vertices()
                )));
            }
            if let Some(m) = s.graph.min_positive_weight() {
                if m < delta {
                    return Err(Error::InvalidSchedule(format!(
                        "segment {i} has edge weight {m:?} below delta {delta:?}"
                    )));
                }
            }
        }
        Ok(Self {
            segments,
            end,
            periodic,
            delta,
            horizon,
        })
    }

    /// A graph that never changes. `delta` is its smallest weight (or one
    /// for an empty graph) and `horizon` is one time unit.
    pub fn constant(graph: WeightedDigraph<W>) -> Self {
        let delta = graph.min_positive_weight().unwrap_or_else(W::one);
        Self {
            segments: vec![Segment {
                start: W::zero(),
                graph,
            }],
            end: W::one(),
            periodic: true,
            delta,
            horizon: W::one(),
        }
    }

    pub fn segments(&self) -> &[Segment<W>] {
        &self.segments
    }

    pub fn n_vertices(&self) -> usize {
        self.segments[0].graph.n_vertices()
    }

    pub fn delta(&self) -> W {
        self.delta
    }

    pub fn horizon(&self) -> W {
        self.horizon
    }

    pub fn end(&self) -> W {
        self.end
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn start(&self) -> W {
        self.segments[0].start
    }

    fn period(&self) -> W {
        self.end - self.start()
    }

    fn coverage_error(&self, t1: W, t2: W) -> Error {
        let coverage = if self.periodic {
            format!("[{}, inf)", self.start().as_f64())
        } else {
            format!("[{}, {}]", self.start().as_f64(), self.end.as_f64())
        };
        Error::ScheduleCoverage {
            t1: t1.as_f64(),
            t2: t2.as_f64(),
            coverage,
        }
    }

    /// Index of the active segment at `t` and the absolute time at which it
    /// stops being active.
    fn locate(&self, t: W) -> Option<(usize, W)> {
        if t < self.start() {
            return None;
        }
        let (phase, offset) = if self.periodic {
            let rel = t - self.start();
            let phase = self.start() + rel % self.period();
            (phase, t - phase)
        } else {
            if t > self.end {
                return None;
            }
            (t, W::zero())
        };
        let idx = self
            .segments
            .iter()
            .rposition(|s| s.start <= phase)
            .unwrap_or(0);
        let seg_end = self.segments.get(idx + 1).map(|s| s.start).unwrap_or(self.end);
        Some((idx, seg_end + offset))
    }

    /// Graph active at time `t`.
    pub fn graph_at(&self, t: W) -> Result<&WeightedDigraph<W>> {
        self.locate(t)
            .map(|(i, _)| &self.segments[i].graph)
            .ok_or_else(|| self.coverage_error(t, t))
    }

    /// `∫_{t1}^{t2} A(t) dt` without thresholding.
    pub fn raw_integral(&self, t1: W, t2: W) -> Result<DMatrix<W>> {
        if t2 < t1 {
            return Err(self.coverage_error(t1, t2));
        }
        if t1 < self.start() || (!self.periodic && t2 > self.end) {
            return Err(self.coverage_error(t1, t2));
        }
        let n = self.n_vertices();
        let mut acc = DMatrix::from_element(n, n, W::zero());
        if t1 == t2 {
            return Ok(acc);
        }
        // Walk the segments in order; piece boundaries are `start + k·period`.
        let (mut idx, mut shift) = if self.periodic {
            let rel = t1 - self.start();
            let phase = rel % self.period();
            let idx = self.segments.iter().rposition(|s| s.start <= self.start() + phase).unwrap_or(0);
            (idx, rel - phase)
        } else {
            (self.segments.iter().rposition(|s| s.start <= t1).unwrap_or(0), W::zero())
        };
        loop {
            let seg_start = self.segments[idx].start + shift;
            if seg_start >= t2 {
                break;
            }
            let seg_end = self.segments.get(idx + 1).map(|s| s.start).unwrap_or(self.end) + shift;
            let lo = if seg_start > t1 { seg_start } else { t1 };
            let hi = if seg_end < t2 { seg_end } else { t2 };
            if hi > lo {
                let dt = hi - lo;
                let a = self.segments[idx].graph.adjacency();
                for (out, &w) in acc.iter_mut().zip(a.iter()) {
                    *out = *out + w * dt;
                }
            }
            idx += 1;
            if idx == self.segments.len() {
                if !self.periodic {
                    break;
                }
                idx = 0;
                shift = shift + self.period();
            }
        }
        Ok(acc)
    }

    /// Time-integrated graph over `[t1, t2]` with weights below `delta`
    /// dropped.
    pub fn integrated_graph(&self, t1: W, t2: W) -> Result<WeightedDigraph<W>> {
        if t2 <= t1 {
            return Err(self.coverage_error(t1, t2));
        }
        let raw = self.raw_integral(t1, t2)?;
        let delta = self.delta;
        Ok(WeightedDigraph {
            adjacency: raw.map(|a| if a >= delta { a } else { W::zero() }),
        })
    }

    /// Checks, on the given window start times, whether one vertex reaches
    /// all others in every integrated graph over `[t, t + horizon]`.
    pub fn is_uniformly_connected(&self, grid: &[W]) -> Result<UniformConnectivity> {
        if grid.is_empty() {
            return Err(Error::Empty("uniform-connectivity grid"));
        }
        let windows = grid
            .iter()
            .map(|&t| self.integrated_graph(t, t + self.horizon))
            .collect::<Result<Vec<_>>>()?;
        let root = (0..self.n_vertices()).find(|&k| windows.iter().all(|g| g.reaches_all(k)));
        Ok(UniformConnectivity {
            connected: root.is_some(),
            root,
        })
    }

    /// Converts every weight and time into another weight type.
    pub fn map_weights<V: Weight>(&self, f: impl Fn(W) -> V + Copy) -> GraphSchedule<V> {
        GraphSchedule {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    start: f(s.start),
                    graph: s.graph.map_weights(f),
                })
                .collect(),
            end: f(self.end),
            periodic: self.periodic,
            delta: f(self.delta),
            horizon: f(self.horizon),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn g(rows: &[&[f64]]) -> WeightedDigraph<f64> {
        WeightedDigraph::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn single_edge_schedule(on_until: f64, delta: f64) -> GraphSchedule<f64> {
        let edge = g(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let none = WeightedDigraph::empty(2).unwrap();
        GraphSchedule::new(
            vec![
                Segment { start: 0.0, graph: edge },
                Segment { start: on_until, graph: none },
            ],
            2.0,
            false,
            delta,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn degrees_of_small_graphs() {
        let d = WeightedDigraph::complete(3, 1.0).unwrap().degrees();
        assert_eq!(d.in_degrees, vec![2.0; 3]);
        assert_eq!(d.out_degrees, vec![2.0; 3]);

        let d = g(&[&[0.0, 1.0], &[0.0, 0.0]]).degrees();
        assert_eq!(d.in_degrees, vec![0.0, 1.0]);
        assert_eq!(d.out_degrees, vec![1.0, 0.0]);

        let d = WeightedDigraph::ring_undirected(4, 1.0).unwrap().degrees();
        assert_eq!(d.in_degrees, vec![2.0; 4]);
        assert_eq!(d.out_degrees, vec![2.0; 4]);
    }

    #[test]
    fn laplacian_examples() {
        let l = WeightedDigraph::complete(2, 1.0).unwrap().laplacian(LaplacianKind::In);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let l = g(&[&[0.0, 1.0], &[0.0, 0.0]]).laplacian(LaplacianKind::In);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 1.0]));
        assert_eq!(l.row_sum().transpose(), nalgebra::DVector::from_vec(vec![0.0, 0.0]));
    }

    #[test]
    fn classification() {
        let und = WeightedDigraph::ring_undirected(5, 2.0).unwrap().classify();
        assert_eq!((und.is_undirected, und.is_bidirectional, und.is_balanced), (true, true, true));

        let cyc = WeightedDigraph::directed_cycle(3, 1.0).unwrap().classify();
        assert_eq!((cyc.is_undirected, cyc.is_bidirectional, cyc.is_balanced), (false, false, true));

        let asym = g(&[&[0.0, 1.0], &[2.0, 0.0]]).classify();
        assert_eq!((asym.is_undirected, asym.is_bidirectional, asym.is_balanced), (false, true, false));
    }

    #[test]
    fn exact_balance_with_rationals() {
        // 1/3 + 1/3 + 1/3 is exactly 1 in rationals.
        let third = Rational64::new(1, 3);
        let one = Rational64::from_integer(1);
        let zero = Rational64::from_integer(0);
        let rows = vec![
            vec![zero, one, zero, zero],
            vec![zero, zero, one, zero],
            vec![zero, zero, zero, one],
            vec![third + third + third, zero, zero, zero],
        ];
        let cyc = WeightedDigraph::from_rows(&rows).unwrap();
        assert!(cyc.classify().is_balanced);

        let mut rows = rows;
        rows[3][0] = Rational64::new(999_999, 1_000_000);
        assert!(!WeightedDigraph::from_rows(&rows).unwrap().classify().is_balanced);
    }

    #[test]
    fn connectivity_examples() {
        let c = WeightedDigraph::directed_cycle(3, 1.0).unwrap().connectivity();
        assert!(c.strongly_connected && c.weakly_connected);

        let path = g(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]).connectivity();
        assert!(!path.strongly_connected && path.weakly_connected);

        let iso = WeightedDigraph::<f64>::empty(2).unwrap().connectivity();
        assert!(!iso.strongly_connected && !iso.weakly_connected);
    }

    #[test]
    fn generators() {
        let c = WeightedDigraph::complete(3, 1.0).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(c.weight(j, k), if j == k { 0.0 } else { 1.0 });
            }
        }
        let r = WeightedDigraph::ring_undirected(4, 1.0).unwrap();
        assert_eq!(r.adjacency().iter().filter(|&&a| a == 1.0).count(), 8);
        assert_eq!(r.adjacency(), &r.adjacency().transpose());

        let e = WeightedDigraph::<f64>::random_digraph(5, 0.0, 7).unwrap();
        assert!(e.adjacency().iter().all(|&a| a == 0.0));

        let a = WeightedDigraph::<f64>::random_digraph(6, 0.4, 11).unwrap();
        let b = WeightedDigraph::<f64>::random_digraph(6, 0.4, 11).unwrap();
        assert_eq!(a, b);

        assert!(WeightedDigraph::complete(0, 1.0).is_err());
        assert!(WeightedDigraph::ring_undirected(3, 0.0).is_err());
    }

    #[test]
    fn rejects_invalid_adjacency() {
        assert!(WeightedDigraph::from_rows(&[vec![1.0]]).is_err());
        assert!(WeightedDigraph::from_rows(&[vec![0.0, -1.0], vec![0.0, 0.0]]).is_err());
        assert!(WeightedDigraph::from_rows(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn integrated_graph_thresholds() {
        let s = single_edge_schedule(1.0, 0.5);
        assert_eq!(s.integrated_graph(0.0, 2.0).unwrap().weight(0, 1), 1.0);
        assert_eq!(s.integrated_graph(1.0, 2.0).unwrap().weight(0, 1), 0.0);

        let s = single_edge_schedule(0.3, 0.5);
        assert_eq!(s.integrated_graph(0.0, 2.0).unwrap().weight(0, 1), 0.0);
        assert!((s.raw_integral(0.0, 2.0).unwrap()[(0, 1)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn integrated_graph_outside_coverage() {
        let s = single_edge_schedule(1.0, 0.5);
        assert!(matches!(
            s.integrated_graph(1.5, 2.5),
            Err(Error::ScheduleCoverage { .. })
        ));
        assert!(s.integrated_graph(-1.0, 0.5).is_err());
    }

    #[test]
    fn periodic_schedule_repeats() {
        let a = g(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = g(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let s = GraphSchedule::new(
            vec![Segment { start: 0.0, graph: a.clone() }, Segment { start: 1.0, graph: b.clone() }],
            2.0,
            true,
            0.5,
            2.0,
        )
        .unwrap();
        assert_eq!(s.graph_at(0.5).unwrap(), &a);
        assert_eq!(s.graph_at(3.5).unwrap(), &b);
        assert_eq!(s.graph_at(100.25).unwrap(), &a);
        let raw = s.raw_integral(0.5, 10.5).unwrap();
        assert!((raw[(0, 1)] - 5.0).abs() < 1e-12);
        assert!((raw[(1, 0)] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_connectivity_examples() {
        let complete = GraphSchedule::constant(WeightedDigraph::complete(4, 1.0).unwrap());
        let r = complete.is_uniformly_connected(&[0.0, 0.3, 7.0]).unwrap();
        assert_eq!(r, UniformConnectivity { connected: true, root: Some(0) });

        // 1 ⇝ 2 then 2 ⇝ 1, each for T/4, repeating.
        let horizon = 1.0;
        let a = g(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = g(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let s = GraphSchedule::new(
            vec![Segment { start: 0.0, graph: a }, Segment { start: 0.25, graph: b }],
            0.5,
            true,
            0.1,
            horizon,
        )
        .unwrap();
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.125).collect();
        let r = s.is_uniformly_connected(&grid).unwrap();
        assert!(r.connected);
        assert_eq!(r.root, Some(0));

        let never = GraphSchedule::constant(WeightedDigraph::<f64>::empty(2).unwrap());
        assert_eq!(
            never.is_uniformly_connected(&[0.0, 1.0]).unwrap(),
            UniformConnectivity { connected: false, root: None }
        );
        assert!(never.is_uniformly_connected(&[]).is_err());
    }

    #[test]
    fn schedule_validation() {
        let a = WeightedDigraph::complete(2, 0.2).unwrap();
        let seg = |t: f64| Segment { start: t, graph: a.clone() };
        assert!(GraphSchedule::new(vec![seg(0.0)], 1.0, false, 0.5, 1.0).is_err());
        assert!(GraphSchedule::new(vec![seg(0.0), seg(0.0)], 1.0, false, 0.1, 1.0).is_err());
        assert!(GraphSchedule::new(vec![seg(0.0)], 0.0, false, 0.1, 1.0).is_err());
        assert!(GraphSchedule::new(vec![], 1.0, false, 0.1, 1.0).is_err());
        let b = WeightedDigraph::complete(3, 1.0).unwrap();
        assert!(GraphSchedule::new(
            vec![seg(0.0), Segment { start: 0.5, graph: b }],
            1.0,
            false,
            0.1,
            1.0
        )
        .is_err());
    }

    #[test]
    fn undirected_laplacian_is_psd() {
        for seed in 0..20 {
            let r = WeightedDigraph::<f64>::random_digraph(6, 0.5, seed).unwrap();
            let sym = WeightedDigraph::from_adjacency(r.adjacency() + r.adjacency().transpose()).unwrap();
            let l = sym.laplacian(LaplacianKind::In);
            let eig = l.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&v| v > -1e-10), "{:?}", eig.eigenvalues);
        }
    }
}
