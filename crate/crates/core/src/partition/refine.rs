use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Graph;

/// Admissible block weights of a bipartition of `total` node weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Balance {
    pub min: u64,
    pub max: u64,
}

impl Balance {
    /// Upper bound `(1 + eps) * ceil(total / 2)`, lower bound the complement
    /// of it (at least 1 so neither block is empty).
    pub fn new(total: u64, epsilon: f64) -> Self {
        let half = total.div_ceil(2);
        let max = (((1.0 + epsilon) * half as f64) + 1e-9).floor() as u64;
        let max = max.clamp(half, total.saturating_sub(1).max(half));
        Balance {
            min: total.saturating_sub(max).max(1),
            max,
        }
    }

    pub fn admits(&self, w: [u64; 2]) -> bool {
        w.iter().all(|&b| b >= self.min && b <= self.max)
    }
}

/// Cut weights before and after one refinement pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmPass {
    /// 0 is the input graph; higher levels are coarser.
    pub level: usize,
    pub cut_before: f64,
    pub cut_after: f64,
    pub moves_kept: usize,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    gain: f64,
    node: u32,
    stamp: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Max-heap on gain; among equal gains the lowest node id comes first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| self.stamp.cmp(&other.stamp))
    }
}

/// Move gains with one lazily invalidated max-heap per block.
struct GainState<'g> {
    g: &'g Graph,
    gain: Vec<f64>,
    stamp: Vec<u32>,
    locked: Vec<bool>,
    heaps: [BinaryHeap<Entry>; 2],
    weights: [u64; 2],
}

impl<'g> GainState<'g> {
    fn new(g: &'g Graph, side: &[u8]) -> Self {
        let n = g.node_count();
        let mut weights = [0u64; 2];
        let gain: Vec<f64> = (0..n)
            .map(|u| {
                weights[side[u] as usize] += g.node_weight(u);
                g.neighbors(u)
                    .map(|(v, w)| if side[v] != side[u] { w } else { -w })
                    .sum()
            })
            .collect();
        GainState {
            g,
            gain,
            stamp: vec![0; n],
            locked: vec![false; n],
            heaps: [BinaryHeap::new(), BinaryHeap::new()],
            weights,
        }
    }

    fn push(&mut self, u: usize, side: &[u8]) {
        self.heaps[side[u] as usize].push(Entry {
            gain: self.gain[u],
            node: u as u32,
            stamp: self.stamp[u],
        });
    }

    /// Best live entry of block `s`, without removing it.
    fn peek(&mut self, s: usize) -> Option<Entry> {
        while let Some(&e) = self.heaps[s].peek() {
            let u = e.node as usize;
            if self.locked[u] || e.stamp != self.stamp[u] {
                self.heaps[s].pop();
            } else {
                return Some(e);
            }
        }
        None
    }

    /// Moves `u` to the other block and updates neighbor gains. Returns the
    /// cut reduction.
    fn apply(&mut self, u: usize, side: &mut [u8], requeue: bool) -> f64 {
        let from = side[u] as usize;
        let g = self.gain[u];
        side[u] ^= 1;
        self.weights[from] -= self.g.node_weight(u);
        self.weights[1 - from] += self.g.node_weight(u);
        self.gain[u] = -g;
        self.stamp[u] = self.stamp[u].wrapping_add(1);
        let graph = self.g;
        for (v, w) in graph.neighbors(u) {
            // v's edge to u flips between cut and uncut.
            self.gain[v] += if side[v] as usize == from { 2.0 * w } else { -2.0 * w };
            self.stamp[v] = self.stamp[v].wrapping_add(1);
            if requeue && !self.locked[v] {
                self.push(v, side);
            }
        }
        g
    }
}

/// Region growing on top of the gain heaps: block 1 absorbs nodes from
/// block 0, and only neighbors of absorbed nodes are ever queued.
pub(super) struct Grower<'g>(GainState<'g>);

impl<'g> Grower<'g> {
    pub(super) fn new(g: &'g Graph, side: &[u8]) -> Self {
        Grower(GainState::new(g, side))
    }

    pub(super) fn weight(&self, s: usize) -> u64 {
        self.0.weights[s]
    }

    pub(super) fn best_frontier(&mut self) -> Option<usize> {
        self.0.peek(0).map(|e| e.node as usize)
    }

    pub(super) fn lock(&mut self, u: usize) {
        self.0.locked[u] = true;
    }

    pub(super) fn is_locked(&self, u: usize) -> bool {
        self.0.locked[u]
    }

    pub(super) fn absorb(&mut self, u: usize, side: &mut [u8]) {
        debug_assert_eq!(side[u], 0);
        self.0.locked[u] = true;
        self.0.apply(u, side, true);
    }
}

/// Boundary Fiduccia-Mattheyses refinement.
///
/// Each pass moves unlocked nodes one at a time, always taking the highest
/// gain move that keeps the blocks within `bal`, then rolls back to the
/// prefix with the lowest cut. Passes stop when one fails to lower the cut
/// or after `max_passes`.
pub(super) fn fm_refine(g: &Graph, side: &mut [u8], bal: Balance, max_passes: usize, level: usize, trace: &mut Vec<FmPass>) {
    let n = g.node_count();
    let scale: f64 = g.edges().map(|(_, _, w)| w).sum::<f64>().max(1e-300);
    let tol = 1e-12 * scale;
    let stall_limit = (n / 50).clamp(25, 300);

    for _ in 0..max_passes {
        let cut_before = g.cut_weight(side);
        let mut st = GainState::new(g, side);
        for u in 0..n {
            if g.neighbors(u).any(|(v, _)| side[v] != side[u]) {
                st.push(u, side);
            }
        }

        let mut moves: Vec<usize> = Vec::new();
        let (mut cut, mut best_cut, mut best_len) = (cut_before, cut_before, 0);
        let mut since_best = 0;
        loop {
            let mut pick: Option<Entry> = None;
            for s in 0..2 {
                let Some(e) = st.peek(s) else { continue };
                let w = g.node_weight(e.node as usize);
                let next = if s == 0 {
                    [st.weights[0] - w, st.weights[1] + w]
                } else {
                    [st.weights[0] + w, st.weights[1] - w]
                };
                if !bal.admits(next) {
                    continue;
                }
                if pick.is_none_or(|p| e > p) {
                    pick = Some(e);
                }
            }
            let Some(e) = pick else { break };
            let u = e.node as usize;
            st.locked[u] = true;
            cut -= st.apply(u, side, true);
            moves.push(u);
            if cut < best_cut - tol {
                best_cut = cut;
                best_len = moves.len();
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > stall_limit {
                    break;
                }
            }
        }
        for &u in moves[best_len..].iter().rev() {
            side[u] ^= 1;
        }
        let cut_after = if best_len == 0 { cut_before } else { g.cut_weight(side) };
        trace.push(FmPass {
            level,
            cut_before,
            cut_after,
            moves_kept: best_len,
        });
        if best_len == 0 {
            break;
        }
    }
}

/// Moves best-gain nodes out of an overweight (or into an underweight)
/// block until `bal` holds. Used only when projection or growing could not
/// meet the bound on its own.
pub(super) fn rebalance(g: &Graph, side: &mut [u8], bal: Balance) {
    let mut st = GainState::new(g, side);
    if bal.admits(st.weights) {
        return;
    }
    for u in 0..g.node_count() {
        st.push(u, side);
    }
    while !bal.admits(st.weights) {
        let from = if st.weights[0] > bal.max || st.weights[1] < bal.min { 0 } else { 1 };
        let Some(e) = st.peek(from) else { break };
        let u = e.node as usize;
        st.locked[u] = true;
        // Nodes too heavy for the receiving block stay put.
        if st.weights[1 - from] + g.node_weight(u) <= bal.max {
            st.apply(u, side, true);
        }
    }
}
