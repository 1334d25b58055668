use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Weighted undirected graph in compressed adjacency form.
///
/// Node weights count the voxels a node stands for; they are 1 on graphs
/// built from voxels and grow as the partitioner contracts matchings.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    xadj: Vec<usize>,
    adjncy: Vec<u32>,
    ewgt: Vec<f64>,
    vwgt: Vec<u64>,
}

impl Graph {
    /// Graph on `n` unit-weight nodes. Parallel edges are summed; self loops,
    /// out-of-range endpoints and negative or non-finite weights are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut lists: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n];
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid("edge", format!("({u}, {v}) outside {n} nodes")));
            }
            if u == v {
                return Err(Error::invalid("edge", format!("self loop at {u}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid("weight", format!("edge ({u}, {v}) has weight {w}")));
            }
            *lists[u].entry(v as u32).or_default() += w;
            *lists[v].entry(u as u32).or_default() += w;
        }
        let mut g = Graph {
            xadj: Vec::with_capacity(n + 1),
            adjncy: Vec::new(),
            ewgt: Vec::new(),
            vwgt: vec![1; n],
        };
        g.xadj.push(0);
        for l in lists {
            for (v, w) in l {
                g.adjncy.push(v);
                g.ewgt.push(w);
            }
            g.xadj.push(g.adjncy.len());
        }
        Ok(g)
    }

    /// Assembles a graph from raw CSR arrays that are already symmetric.
    pub(crate) fn from_csr(xadj: Vec<usize>, adjncy: Vec<u32>, ewgt: Vec<f64>, vwgt: Vec<u64>) -> Self {
        debug_assert_eq!(xadj.len(), vwgt.len() + 1);
        debug_assert_eq!(adjncy.len(), ewgt.len());
        Graph {
            xadj,
            adjncy,
            ewgt,
            vwgt,
        }
    }

    pub fn node_count(&self) -> usize {
        self.vwgt.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjncy.len() / 2
    }

    pub fn degree(&self, u: usize) -> usize {
        self.xadj[u + 1] - self.xadj[u]
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.xadj[u]..self.xadj[u + 1];
        self.adjncy[r.clone()].iter().map(|&v| v as usize).zip(self.ewgt[r].iter().copied())
    }

    pub fn node_weight(&self, u: usize) -> u64 {
        self.vwgt[u]
    }

    pub fn total_node_weight(&self) -> u64 {
        self.vwgt.iter().sum()
    }

    /// Every undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| self.neighbors(u).filter(move |&(v, _)| u < v).map(move |(v, w)| (u, v, w)))
    }

    /// Total weight of edges whose endpoints lie on different sides.
    pub fn cut_weight(&self, side: &[u8]) -> f64 {
        self.edges().filter(|&(u, v, _)| side[u] != side[v]).map(|(_, _, w)| w).sum()
    }

    /// Text dump with one `u v w` line per undirected edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v, w) in self.edges() {
            writeln!(s, "{u} {v} {w}").expect("writing to a String");
        }
        s
    }

    /// Parses the format of [`Graph::to_edge_list`]. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_edge_list(n: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::invalid("edge list", format!("line {}: expected `u v w`, got {line:?}", lineno + 1));
            let mut it = line.split_whitespace();
            let u = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let v = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let w = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            edges.push((u, v, w));
        }
        Self::from_edges(n, edges)
    }
}
