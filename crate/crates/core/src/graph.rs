//! Undirected graphs with node features, adjacency normalization, embedded
//! datasets, and negative-edge sampling.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// An undirected simple graph. Edges are stored once, as `(i, j)` with `i < j`,
/// in sorted order.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    features: Matrix,
    labels: Option<Matrix>,
}

/// Non-edges drawn for one training iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeSample {
    pub iteration: usize,
    pub pairs: Vec<(usize, usize)>,
}

#[inline]
pub(crate) fn canonical(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl Graph {
    /// Validates and canonicalizes: self-loops and out-of-range endpoints are
    /// rejected, duplicates (in either direction) collapse to one edge.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Matrix,
        labels: Option<Matrix>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Index {
                    what: "edge endpoint",
                    index: (i, j),
                    bounds: (n, n),
                });
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop on node {i}")));
            }
            set.insert(canonical(i, j));
        }
        if features.rows() != n {
            return Err(Error::Dimension {
                op: "graph features",
                left: (n, features.cols()),
                right: features.shape(),
            });
        }
        if let Some(y) = &labels {
            if y.shape() != (n, 1) {
                return Err(Error::Dimension {
                    op: "graph labels",
                    left: (n, 1),
                    right: y.shape(),
                });
            }
            if let Some(bad) = y.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(Error::Graph(format!("labels must be 0 or 1, found {bad}")));
            }
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
            features,
            labels,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&Matrix> {
        self.labels.as_ref()
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self> {
        if features.rows() != self.n {
            return Err(Error::Dimension {
                op: "graph features",
                left: (self.n, features.cols()),
                right: features.shape(),
            });
        }
        self.features = features;
        Ok(self)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.binary_search(&canonical(i, j)).is_ok()
    }

    /// Symmetric 0/1 adjacency matrix with a zero diagonal.
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a.set(i, j, 1.0);
            a.set(j, i, 1.0);
        }
        a
    }

    /// `Â = D̃^{-1/2} (A + I) D̃^{-1/2}` with `d̃_ii = 1 + Σ_j a_ij`.
    pub fn normalized_adjacency(&self) -> Matrix {
        let mut degree = vec![1.0f64; self.n];
        for &(i, j) in &self.edges {
            degree[i] += 1.0;
            degree[j] += 1.0;
        }
        let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
        let a = self.adjacency();
        Matrix::from_fn(self.n, self.n, |i, j| {
            let m = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
            m * (inv_sqrt[i] * inv_sqrt[j])
        })
    }

    /// All unordered non-adjacent pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if !self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Uniform sample of `count` distinct non-edges, deterministic in `seed`.
    pub fn sample_negative_edges(&self, count: usize, seed: u64) -> Result<NegativeSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(NegativeSample {
            iteration: 0,
            pairs: self.sample_negative_edges_with(count, &mut rng)?,
        })
    }

    /// Without-replacement sample from `E^c`, returned in sorted order.
    pub fn sample_negative_edges_with<R: Rng + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<(usize, usize)>> {
        let pool = self.non_edges();
        if count > pool.len() {
            return Err(Error::Capacity {
                requested: count,
                available: pool.len(),
            });
        }
        let mut picked: Vec<(usize, usize)> = index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        picked.sort_unstable();
        Ok(picked)
    }

    /// Breadth-first hop distances from `source`; `None` for unreachable nodes.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut neighbors = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        let mut dist = vec![None; self.n];
        if source >= self.n {
            return dist;
        }
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Zachary's karate club, 78 undirected edges between 34 members.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3), (0, 4), (0, 5), (0, 6), (4, 6),
    (5, 6), (0, 7), (1, 7), (2, 7), (3, 7), (0, 8), (2, 8), (2, 9), (0, 10), (4, 10),
    (5, 10), (0, 11), (0, 12), (3, 12), (0, 13), (1, 13), (2, 13), (3, 13), (5, 16), (6, 16),
    (0, 17), (1, 17), (0, 19), (1, 19), (0, 21), (1, 21), (23, 25), (24, 25), (2, 27), (23, 27),
    (24, 27), (2, 28), (23, 29), (26, 29), (1, 30), (8, 30), (0, 31), (24, 31), (25, 31), (28, 31),
    (2, 32), (8, 32), (14, 32), (15, 32), (18, 32), (20, 32), (22, 32), (23, 32), (29, 32), (30, 32),
    (31, 32), (8, 33), (9, 33), (13, 33), (14, 33), (15, 33), (18, 33), (19, 33), (20, 33), (22, 33),
    (23, 33), (26, 33), (27, 33), (28, 33), (29, 33), (30, 33), (31, 33), (32, 33),
];

/// Four-community assignment of the karate club members (classes 0-3).
pub const KARATE_COMMUNITIES: [u8; 34] = [
    1, 1, 1, 1, 3, 3, 3, 1, 0, 1, 3, 1, 1, 1, 0, 0, 3, 1, 0, 1, 0, 1, 0, 0, 2, 2, 0, 0, 2, 0, 0, 2, 0, 0,
];

/// Karate club with `H₀ = I₃₄` and binary labels: communities 0 and 2 map to
/// class 0, communities 1 and 3 to class 1.
pub fn karate_fixture() -> Graph {
    let n = KARATE_COMMUNITIES.len();
    let labels = Matrix::from_fn(n, 1, |i, _| match KARATE_COMMUNITIES[i] {
        0 | 2 => 0.0,
        _ => 1.0,
    });
    Graph::new(n, KARATE_EDGES, Matrix::identity(n), Some(labels)).expect("embedded karate data is valid")
}

pub const DDI_NODES: usize = 10;
pub const DDI_FEATURES: usize = 20;
pub const DDI_FEATURE_SEED: u64 = 20_240_417;

/// Synthetic 10-node interaction graph with 13 edges. The triangle 1-8-9
/// hangs off node 6, four or more hops from nodes 2 and 7; node 0 is three
/// hops from node 2.
pub const DDI_EDGES: [(usize, usize); 13] = [
    (0, 6), (1, 8), (1, 9), (2, 3), (2, 4), (2, 5), (3, 5), (3, 6), (4, 5), (4, 7),
    (5, 7), (6, 9), (8, 9),
];

/// The synthetic link-prediction fixture: [`DDI_EDGES`] and a seeded
/// `10×20` feature matrix with entries uniform on `[-1, 1)`.
pub fn ddi_fixture() -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(DDI_FEATURE_SEED);
    let features = Matrix::from_fn(DDI_NODES, DDI_FEATURES, |_, _| rng.gen_range(-1.0..1.0));
    Graph::new(DDI_NODES, DDI_EDGES, features, None).expect("embedded ddi data is valid")
}
