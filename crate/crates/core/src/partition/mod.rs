//! Balanced two-way graph partitioning.
//!
//! The partitioner is multilevel: the graph is coarsened by contracting
//! randomized heavy-edge matchings, the coarsest graph is split by greedy
//! region growing, and the split is carried back level by level with
//! Fiduccia-Mattheyses refinement at each one.

mod coarsen;
mod graph;
mod refine;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use graph::Graph;
pub use refine::{Balance, FmPass};

use crate::error::{Error, Result};
use crate::voxel::{Component, LocalIndex, NEIGHBORS_6};
use refine::{fm_refine, rebalance};

/// Number of initial partitions tried on the coarsest graph.
const INITIAL_TRIALS: usize = 8;

/// Coarsening gives up once a level shrinks the graph by less than this.
const STALL_RATIO: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionerConfig {
    pub epsilon: f64,
    pub seed: u64,
    pub coarsen_floor: usize,
    pub fm_passes: usize,
}

impl Default for PartitionerConfig {
    fn default() -> Self {
        PartitionerConfig {
            epsilon: 0.5,
            seed: 0,
            coarsen_floor: 40,
            fm_passes: 10,
        }
    }
}

impl PartitionerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", format!("{} is not a positive number", self.epsilon)));
        }
        if self.coarsen_floor < 2 {
            return Err(Error::invalid("coarsen_floor", "must be at least 2"));
        }
        Ok(())
    }
}

/// A two-block split of a graph's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Bipartition {
    /// Block (0 or 1) of every node. Node 0 is always in block 0.
    pub side: Vec<u8>,
    pub cut_weight: f64,
    pub block_sizes: [usize; 2],
}

impl Bipartition {
    /// Whether the split satisfies `max(n0, n1) <= (1 + eps) ceil(n / 2)`
    /// with both blocks non-empty.
    pub fn is_balanced(&self, epsilon: f64) -> bool {
        let n = self.side.len() as u64;
        let [a, b] = self.block_sizes.map(|s| s as u64);
        a > 0 && b > 0 && Balance::new(n, epsilon).admits([a, b])
    }
}

/// Splits `g` into two blocks of bounded imbalance and small cut weight.
pub fn bipartition(g: &Graph, cfg: &PartitionerConfig) -> Result<Bipartition> {
    bipartition_traced(g, cfg).map(|(b, _)| b)
}

/// As [`bipartition`], also returning every refinement pass in the order run.
pub fn bipartition_traced(g: &Graph, cfg: &PartitionerConfig) -> Result<(Bipartition, Vec<FmPass>)> {
    cfg.validate()?;
    let n = g.node_count();
    if n < 2 {
        return Err(Error::GraphTooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::new();
    let total = g.total_node_weight();

    // Coarsening.
    let max_node_weight = ((1.5 * total as f64 / cfg.coarsen_floor as f64).ceil() as u64).max(2);
    let mut levels: Vec<(Graph, Vec<u32>)> = Vec::new();
    loop {
        let cur = levels.last().map_or(g, |(c, _)| c);
        if cur.node_count() <= cfg.coarsen_floor {
            break;
        }
        let (coarse, cmap) = coarsen::contract_matching(cur, max_node_weight, &mut rng);
        if coarse.node_count() as f64 > STALL_RATIO * cur.node_count() as f64 {
            break;
        }
        levels.push((coarse, cmap));
    }

    // Initial partition on the coarsest graph.
    let coarsest = levels.last().map_or(g, |(c, _)| c);
    let bal = Balance::new(total, cfg.epsilon);
    let mut side = initial_partition(coarsest, bal, cfg.fm_passes, levels.len(), &mut rng, &mut trace);

    // Uncoarsening.
    for lvl in (0..levels.len()).rev() {
        let finer = if lvl == 0 { g } else { &levels[lvl - 1].0 };
        let cmap = &levels[lvl].1;
        side = cmap.iter().map(|&c| side[c as usize]).collect();
        rebalance(finer, &mut side, bal);
        fm_refine(finer, &mut side, bal, cfg.fm_passes, lvl, &mut trace);
    }
    rebalance(g, &mut side, bal);

    if side[0] == 1 {
        side.iter_mut().for_each(|s| *s ^= 1);
    }
    let ones = side.iter().filter(|&&s| s == 1).count();
    let b = Bipartition {
        cut_weight: g.cut_weight(&side),
        block_sizes: [n - ones, ones],
        side,
    };
    debug_assert!(b.is_balanced(cfg.epsilon));
    Ok((b, trace))
}

/// Best of several grown-and-refined splits of `g`. The first trial starts
/// from a pseudo-peripheral node, the rest from random nodes.
fn initial_partition(g: &Graph, bal: Balance, fm_passes: usize, level: usize, rng: &mut ChaCha8Rng, trace: &mut Vec<FmPass>) -> Vec<u8> {
    let n = g.node_count();
    let mut best: Option<(f64, Vec<u8>)> = None;
    for trial in 0..INITIAL_TRIALS.min(n) {
        let start = if trial == 0 { pseudo_peripheral(g) } else { rng.random_range(0..n) };
        let mut side = grow(g, start, bal);
        rebalance(g, &mut side, bal);
        fm_refine(g, &mut side, bal, fm_passes, level, trace);
        let cut = g.cut_weight(&side);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, side));
        }
    }
    best.expect("at least one trial").1
}

/// Grows block 1 from `start`, always absorbing the frontier node with the
/// highest gain, until it holds half the node weight.
fn grow(g: &Graph, start: usize, bal: Balance) -> Vec<u8> {
    let n = g.node_count();
    let target = g.total_node_weight().div_ceil(2);
    let mut side = vec![0u8; n];
    let mut st = refine::Grower::new(g, &side);
    let mut next_unvisited = 0;
    let mut seed = Some(start);
    while st.weight(1) < target {
        let u = match seed.take().or_else(|| st.best_frontier()) {
            Some(u) => u,
            None => {
                // Frontier exhausted: the grown set is a union of components.
                while next_unvisited < n && (side[next_unvisited] == 1 || st.is_locked(next_unvisited)) {
                    next_unvisited += 1;
                }
                if next_unvisited == n {
                    break;
                }
                next_unvisited
            }
        };
        if st.weight(1) + g.node_weight(u) > bal.max {
            st.lock(u);
            continue;
        }
        st.absorb(u, &mut side);
    }
    side
}

/// Endpoint of a two-sweep breadth-first search from node 0.
fn pseudo_peripheral(g: &Graph) -> usize {
    let far = farthest(g, 0);
    farthest(g, far)
}

fn farthest(g: &Graph, from: usize) -> usize {
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::from([from]);
    dist[from] = 0;
    let mut last = from;
    while let Some(u) = queue.pop_front() {
        // Queue order is by distance, then by discovery; keep the lowest id at the last distance.
        if dist[u] > dist[last] || (dist[u] == dist[last] && u < last) {
            last = u;
        }
        for (v, _) in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    last
}

/// Splits each block of `b` into its 6-connected parts.
///
/// Node `i` of the bipartition is voxel `i` of `c`. Parts are returned in
/// the scan order of their first voxel and numbered from 1.
pub fn split_blocks(c: &Component, b: &Bipartition) -> Vec<Component> {
    assert_eq!(c.len(), b.side.len(), "bipartition does not cover the component");
    let index = LocalIndex::new(&c.voxels);
    let strides: Vec<isize> = NEIGHBORS_6.iter().map(|&d| index.stride(d)).collect();
    let mut seen = vec![false; c.len()];
    let mut parts = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..c.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut voxels = Vec::new();
        while let Some(i) = queue.pop_front() {
            voxels.push(c.voxels[i]);
            let cell = index.cell_of(c.voxels[i]) as isize;
            for s in &strides {
                if let Some(j) = index.at((cell + s) as usize) {
                    if !seen[j] && b.side[j] == b.side[i] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        parts.push(Component::new(parts.len() + 1, voxels));
    }
    parts
}
