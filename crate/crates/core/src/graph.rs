//! Undirected follower communication topology with leader access flags.
//!
//! Agents are indexed from 0 internally. The serialized form uses 1-based
//! indices so scenario files read the same way the agents are numbered in
//! plots and reports.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SymMatrix;

/// Threshold on λ_min(H) below which the pinned Laplacian is treated as singular.
pub const LAMBDA_MIN_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphError {
    Empty,
    SelfLoop(usize),
    IndexOutOfRange { index: usize, n: usize },
    LeaderLinkCount { expected: usize, found: usize },
    LeaderLinkWeight { agent: usize, value: u8 },
}

impl core::fmt::Display for GraphError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GraphError::Empty => f.write_str("graph needs at least one agent"),
            GraphError::SelfLoop(i) => write!(f, "self-loop on agent {}", i + 1),
            GraphError::IndexOutOfRange { index, n } => {
                write!(f, "agent index {index} outside 1..={n}")
            }
            GraphError::LeaderLinkCount { expected, found } => {
                write!(f, "expected {expected} leader links, found {found}")
            }
            GraphError::LeaderLinkWeight { agent, value } => write!(
                f,
                "leader link of agent {} is {value}; only 0 or 1 are allowed",
                agent + 1
            ),
        }
    }
}

impl core::error::Error for GraphError {}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "GraphSpec", into = "GraphSpec")
)]
pub struct CommGraph {
    n: usize,
    adjacency: Vec<bool>,
    leader_links: Vec<bool>,
}

/// Serialized graph: `{"n": 4, "edges": [[1,2],...], "leader_links": [1,0,0,0]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub leader_links: Vec<u8>,
}

impl TryFrom<GraphSpec> for CommGraph {
    type Error = GraphError;

    fn try_from(spec: GraphSpec) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(spec.edges.len());
        for [a, b] in spec.edges {
            for idx in [a, b] {
                if idx == 0 || idx > spec.n {
                    return Err(GraphError::IndexOutOfRange { index: idx, n: spec.n });
                }
            }
            edges.push((a - 1, b - 1));
        }
        let mut links = Vec::with_capacity(spec.leader_links.len());
        for (agent, value) in spec.leader_links.into_iter().enumerate() {
            match value {
                0 => links.push(false),
                1 => links.push(true),
                value => return Err(GraphError::LeaderLinkWeight { agent, value }),
            }
        }
        CommGraph::new(spec.n, &edges, &links)
    }
}

impl From<CommGraph> for GraphSpec {
    fn from(g: CommGraph) -> Self {
        GraphSpec {
            n: g.n,
            edges: g.edges().map(|(a, b)| [a + 1, b + 1]).collect(),
            leader_links: g.leader_links.iter().map(|&l| l as u8).collect(),
        }
    }
}

impl CommGraph {
    /// Builds a graph from 0-based undirected edges. Duplicate and reversed
    /// pairs collapse to one edge.
    pub fn new(n: usize, edges: &[(usize, usize)], leader_links: &[bool]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if leader_links.len() != n {
            return Err(GraphError::LeaderLinkCount {
                expected: n,
                found: leader_links.len(),
            });
        }
        let mut adjacency = vec![false; n * n];
        for &(a, b) in edges {
            for idx in [a, b] {
                if idx >= n {
                    return Err(GraphError::IndexOutOfRange { index: idx + 1, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
        }
        Ok(Self {
            n,
            adjacency,
            leader_links: leader_links.to_vec(),
        })
    }

    /// Cycle 1-2-…-n-1 with the given leader links.
    pub fn ring(n: usize, leader_links: &[bool]) -> Result<Self, GraphError> {
        let edges: Vec<(usize, usize)> = match n {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        Self::new(n, &edges, leader_links)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    #[inline]
    pub fn leader_link(&self, i: usize) -> bool {
        self.leader_links[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.adjacent(i, j))
    }

    /// Undirected edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).filter(move |&j| self.adjacent(i, j)).map(move |j| (i, j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// L = D − A.
    pub fn laplacian(&self) -> SymMatrix {
        let mut l = SymMatrix::zeros(self.n);
        for i in 0..self.n {
            l.set_sym(i, i, self.degree(i) as f64);
        }
        for (i, j) in self.edges() {
            l.set_sym(i, j, -1.0);
        }
        l
    }

    /// H = L + B with B = diag(leader links).
    pub fn h_matrix(&self) -> SymMatrix {
        let mut h = self.laplacian();
        for i in 0..self.n {
            if self.leader_links[i] {
                h.set_sym(i, i, h.get(i, i) + 1.0);
            }
        }
        h
    }

    /// Breadth-first reachability from agent 0 over follower edges.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn validate_assumption3(&self) -> Assumption3Report {
        Assumption3Report {
            connected: self.is_connected(),
            leader_reachable: self.leader_links.iter().any(|&l| l),
            lambda_min_h: self.h_matrix().min_eigenvalue(),
        }
    }
}

/// Outcome of checking that the graph is connected and pinned to the leader.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Assumption3Report {
    pub connected: bool,
    pub leader_reachable: bool,
    pub lambda_min_h: f64,
}

impl Assumption3Report {
    pub fn passes(&self) -> bool {
        self.connected && self.leader_reachable && self.lambda_min_h > LAMBDA_MIN_THRESHOLD
    }
}
