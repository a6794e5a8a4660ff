//! Relatedness graphs: one per silo, nodes are columns, edges are the
//! silo's known intra matches, connected components are semantic domains.
//!
//! Graphs are immutable after construction and safe to share across
//! threads. Nodes are held in canonical (sorted `ColumnRef`) order;
//! node indices below always refer to that order. Edges are stored
//! canonically with the smaller index first.

use crate::error::Error;
use crate::silo::{ColumnRef, Silo};
use crate::tensor::Matrix;
use crate::Result;
use std::collections::BTreeMap;

/// Node features keyed by column ref; rows must share one width.
pub type ProfileMap = BTreeMap<ColumnRef, Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Positive,
    Negative,
}

/// A set of training edges over one graph's node indices.
///
/// Positive entries are unordered pairs stored as `(u, v)` with `u < v`.
/// Negative entries are directed: `(receiver, source)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    pub kind: EdgeKind,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn positive(edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.iter().all(|&(u, v)| u < v));
        EdgeSet {
            kind: EdgeKind::Positive,
            edges,
        }
    }

    pub fn negative(edges: Vec<(usize, usize)>) -> Self {
        EdgeSet {
            kind: EdgeKind::Negative,
            edges,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelatednessGraph {
    nodes: Vec<ColumnRef>,
    features: Matrix,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    component_of: Vec<usize>,
    components: Vec<Vec<usize>>,
}

impl RelatednessGraph {
    /// Builds a graph from pre-sorted nodes, a feature row per node, and
    /// raw edge pairs (any order; canonicalized, sorted, deduplicated).
    pub fn new(
        nodes: Vec<ColumnRef>,
        features: Matrix,
        raw_edges: &[(usize, usize)],
    ) -> Result<Self> {
        let n = nodes.len();
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]), "nodes not canonical");
        if features.rows() != n {
            return Err(Error::DimMismatch {
                context: "graph feature rows".into(),
                expected: n,
                actual: features.rows(),
            });
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        for &(a, b) in raw_edges {
            if a >= n || b >= n {
                return Err(Error::Other(format!(
                    "edge ({a},{b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::SelfMatch {
                    col: nodes[a].clone(),
                });
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut adjacency = vec![Vec::new(); n];
        let mut uf = UnionFind::new(n);
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
            uf.union(u, v);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        // Component ids by first appearance in node order, so the
        // labeling is independent of edge insertion order.
        let mut component_of = vec![usize::MAX; n];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut root_to_id: BTreeMap<usize, usize> = BTreeMap::new();
        for v in 0..n {
            let root = uf.find(v);
            let id = *root_to_id.entry(root).or_insert_with(|| {
                components.push(Vec::new());
                components.len() - 1
            });
            component_of[v] = id;
            components[id].push(v);
        }

        Ok(RelatednessGraph {
            nodes,
            features,
            edges,
            adjacency,
            component_of,
            components,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[ColumnRef] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ColumnRef {
        &self.nodes[i]
    }

    pub fn node_index(&self, r: &ColumnRef) -> Option<usize> {
        self.nodes.binary_search(r).ok()
    }

    pub fn d_in(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbor indices of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Members of component `c`, ascending.
    pub fn component(&self, c: usize) -> &[usize] {
        &self.components[c]
    }
}

/// One node per column of the silo (isolated if unmatched), one edge per
/// intra match. `profiles` must cover every column and is consulted in
/// canonical node order.
pub fn build_relatedness_graph(silo: &Silo, profiles: &ProfileMap) -> Result<RelatednessGraph> {
    let nodes = silo.column_refs();
    let d_in = profiles.values().next().map_or(0, Vec::len);
    let mut features = Matrix::zeros(nodes.len(), d_in);
    for (i, r) in nodes.iter().enumerate() {
        let row = profiles.get(r).ok_or(Error::NoProfiles)?;
        if row.len() != d_in {
            return Err(Error::DimMismatch {
                context: format!("profile width of {r}"),
                expected: d_in,
                actual: row.len(),
            });
        }
        features.row_mut(i).copy_from_slice(row);
    }
    let mut raw_edges = Vec::with_capacity(silo.intra_matches.len());
    for (a, b) in &silo.intra_matches {
        let ia = nodes.binary_search(a);
        let ib = nodes.binary_search(b);
        match (ia, ib) {
            (Ok(ia), Ok(ib)) => raw_edges.push((ia, ib)),
            _ => {
                return Err(Error::MissingMatchColumn {
                    left: a.clone(),
                    right: b.clone(),
                })
            }
        }
    }
    RelatednessGraph::new(nodes, features, &raw_edges)
}

/// The graph's own edges as a positive training set.
pub fn positive_edges(g: &RelatednessGraph) -> EdgeSet {
    EdgeSet::positive(g.edges().to_vec())
}

/// Every unordered cross-component pair, ascending. Oracle for the
/// negative samplers.
pub fn all_negative_pairs(g: &RelatednessGraph) -> Vec<(usize, usize)> {
    let n = g.n_nodes();
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if g.component_of(u) != g.component_of(v) {
                pairs.push((u, v));
            }
        }
    }
    pairs
}
