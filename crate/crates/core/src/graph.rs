//! Undirected simple graphs in compressed adjacency form.
//!
//! Self-loops are never stored. Operators that need `Â = A + I` inject the
//! diagonal themselves, so neighbor sums such as the Dirichlet energy see
//! only true neighbors.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    operator: OnceLock<NormalizedOperator>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicates and both orientations are
    /// folded into one undirected edge; self-edges are rejected.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= node_count {
                    return Err(Error::NodeOutOfRange { id, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfEdge(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_adjacency(adj))
    }

    fn from_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Self {
            offsets,
            neighbors,
            operator: OnceLock::new(),
        }
    }

    pub fn generate(kind: GraphKind) -> Result<Self> {
        kind.build()
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.node_count()).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    /// The GCN propagation matrix `D̂^{-1/2} (A + I) D̂^{-1/2}`, built once.
    pub fn normalized_operator(&self) -> &NormalizedOperator {
        self.operator.get_or_init(|| NormalizedOperator::new(self))
    }

    /// Maximal connected components, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &w in self.neighbors(u) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut local = vec![usize::MAX; self.node_count()];
        for (k, &u) in nodes.iter().enumerate() {
            if u >= self.node_count() {
                return Err(Error::NodeOutOfRange {
                    id: u,
                    node_count: self.node_count(),
                });
            }
            local[u] = k;
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (k, &u) in nodes.iter().enumerate() {
            adj[k].extend(
                self.neighbors(u)
                    .iter()
                    .filter(|&&w| local[w] != usize::MAX)
                    .map(|&w| local[w]),
            );
        }
        if adj.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(Self::from_adjacency(adj))
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.node_count();
        let mut check = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut check[p], true)) {
            return Err(Error::invalid("not a permutation of the node ids"));
        }
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            adj[perm[i]].extend(self.neighbors(i).iter().map(|&j| perm[j]));
        }
        Ok(Self::from_adjacency(adj))
    }

    /// Keeps the undirected edges for which `keep(i, j)` is true.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let mut adj = vec![Vec::new(); self.node_count()];
        for (i, j) in self.edges() {
            if keep(i, j) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        Self::from_adjacency(adj)
    }

    /// `L X` with `L = D - A` the combinatorial Laplacian.
    pub fn laplacian_apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check_rows(x)?;
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..self.node_count() {
            let d = self.degree(i) as f64;
            let row = out.row_mut(i);
            for (o, &xi) in row.iter_mut().zip(x.row(i)) {
                *o = d * xi;
            }
            for &j in self.neighbors(i) {
                for (o, &xj) in row.iter_mut().zip(x.row(j)) {
                    *o -= xj;
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn check_rows(&self, x: &Matrix) -> Result<()> {
        if x.rows() != self.node_count() {
            return Err(Error::shape(format!(
                "feature matrix has {} rows, graph has {} nodes",
                x.rows(),
                self.node_count()
            )));
        }
        Ok(())
    }

    /// Short stable fingerprint of the node count and edge set.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("v={}\n", self.node_count()));
        for (i, j) in self.edges() {
            hasher.update(format!("{i} {j}\n"));
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.offsets == other.offsets && self.neighbors == other.neighbors
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.node_count())
            .field("edges", &self.edge_count())
            .finish()
    }
}

/// Deterministic synthetic graph families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// 4-neighbor lattice with `height * width` nodes.
    Grid2d { height: usize, width: usize },
    Ring(usize),
    Complete(usize),
    /// Node 0 is the hub.
    Star(usize),
    /// Two copies of `K_k` joined by one bridge edge, `2k` nodes.
    Barbell(usize),
}

impl GraphKind {
    fn build(self) -> Result<Graph> {
        let positive = |n: usize, what: &str| {
            if n == 0 {
                Err(Error::InvalidSize(format!("{what} must be positive")))
            } else {
                Ok(n)
            }
        };
        let mut edges = Vec::new();
        let v = match self {
            GraphKind::Grid2d { height, width } => {
                positive(height, "grid height")?;
                positive(width, "grid width")?;
                for r in 0..height {
                    for c in 0..width {
                        let i = r * width + c;
                        if c + 1 < width {
                            edges.push((i, i + 1));
                        }
                        if r + 1 < height {
                            edges.push((i, i + width));
                        }
                    }
                }
                height * width
            }
            GraphKind::Ring(n) => {
                positive(n, "ring size")?;
                if n > 1 {
                    edges.extend((0..n).map(|i| (i, (i + 1) % n)));
                }
                n
            }
            GraphKind::Complete(n) => {
                positive(n, "complete graph size")?;
                for i in 0..n {
                    edges.extend((i + 1..n).map(|j| (i, j)));
                }
                n
            }
            GraphKind::Star(n) => {
                positive(n, "star size")?;
                edges.extend((1..n).map(|j| (0, j)));
                n
            }
            GraphKind::Barbell(k) => {
                positive(k, "barbell clique size")?;
                for offset in [0, k] {
                    for i in 0..k {
                        edges.extend((i + 1..k).map(|j| (offset + i, offset + j)));
                    }
                }
                edges.push((k - 1, k));
                2 * k
            }
        };
        Graph::from_edges(v, &edges)
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Grid2d { height, width } => write!(f, "grid:{height}x{width}"),
            GraphKind::Ring(n) => write!(f, "ring:{n}"),
            GraphKind::Complete(n) => write!(f, "complete:{n}"),
            GraphKind::Star(n) => write!(f, "star:{n}"),
            GraphKind::Barbell(k) => write!(f, "barbell:{k}"),
        }
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    /// Parses `grid:HxW`, `ring:N`, `complete:N`, `star:N` or `barbell:K`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognised graph kind '{s}'"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        Ok(match name.trim() {
            "grid" | "grid2d" => {
                let (h, w) = arg.split_once('x').ok_or_else(bad)?;
                GraphKind::Grid2d {
                    height: num(h)?,
                    width: num(w)?,
                }
            }
            "ring" => GraphKind::Ring(num(arg)?),
            "complete" => GraphKind::Complete(num(arg)?),
            "star" => GraphKind::Star(num(arg)?),
            "barbell" => GraphKind::Barbell(num(arg)?),
            _ => return Err(bad()),
        })
    }
}

/// Sparse symmetric `P = D̂^{-1/2} Â D̂^{-1/2}` with `Â = A + I`.
///
/// Stored in CSR form with the diagonal entry first in each row.
#[derive(Clone, Debug)]
pub struct NormalizedOperator {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedOperator {
    pub fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / ((1 + g.degree(i)) as f64).sqrt())
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n + 2 * g.edge_count());
        let mut values = Vec::with_capacity(n + 2 * g.edge_count());
        offsets.push(0);
        for i in 0..n {
            cols.push(i);
            values.push(inv_sqrt[i] * inv_sqrt[i]);
            for &j in g.neighbors(i) {
                cols.push(j);
                values.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            offsets.push(cols.len());
        }
        Self {
            offsets,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Nonzero entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `P X`. Since `P` is symmetric this is also the adjoint action.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.dim() {
            return Err(Error::shape(format!(
                "operator of size {} applied to {} rows",
                self.dim(),
                x.rows()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..self.dim() {
            let out_row = out.row_mut(i);
            for (j, p) in self.row(i) {
                for (o, &xj) in out_row.iter_mut().zip(x.row(j)) {
                    *o += p * xj;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for (j, p) in self.row(i) {
                m[(i, j)] = p;
            }
        }
        m
    }
}
