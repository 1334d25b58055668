use rand::seq::SliceRandom;
use rand::Rng;

use super::Graph;

const UNMATCHED: u32 = u32::MAX;

/// Contracts a randomized heavy-edge matching of `g`.
///
/// Nodes are visited in a random order; each unmatched node is paired with
/// the unmatched neighbor behind its heaviest edge (ties to the lower id),
/// provided the merged weight stays within `max_node_weight`. Returns the
/// coarse graph and the fine-to-coarse node map.
pub(super) fn contract_matching<R: Rng>(g: &Graph, max_node_weight: u64, rng: &mut R) -> (Graph, Vec<u32>) {
    let n = g.node_count();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);

    let mut mate = vec![UNMATCHED; n];
    for &u in &order {
        let u = u as usize;
        if mate[u] != UNMATCHED {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (v, w) in g.neighbors(u) {
            if mate[v] != UNMATCHED || g.node_weight(u) + g.node_weight(v) > max_node_weight {
                continue;
            }
            // Neighbors are sorted, so strict comparison keeps the lowest id on ties.
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((v, w));
            }
        }
        let v = best.map_or(u, |(v, _)| v);
        mate[u] = v as u32;
        mate[v] = u as u32;
    }

    let mut cmap = vec![UNMATCHED; n];
    let mut members: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        if cmap[u] == UNMATCHED {
            let v = mate[u] as usize;
            let c = members.len() as u32;
            cmap[u] = c;
            cmap[v] = c;
            members.push((u, v));
        }
    }

    let nc = members.len();
    let mut xadj = Vec::with_capacity(nc + 1);
    let mut adjncy = Vec::new();
    let mut ewgt = Vec::new();
    let mut vwgt = Vec::with_capacity(nc);
    // Position of coarse neighbor `c` in the current row, or usize::MAX.
    let mut slot = vec![usize::MAX; nc];
    xadj.push(0);
    for (c, &(u, v)) in members.iter().enumerate() {
        let row_start = adjncy.len();
        let fine: &[usize] = if u == v { &[u][..] } else { &[u, v][..] };
        let mut weight = 0;
        for &f in fine {
            weight += g.node_weight(f);
            for (x, w) in g.neighbors(f) {
                let cx = cmap[x] as usize;
                if cx == c {
                    continue;
                }
                if slot[cx] == usize::MAX {
                    slot[cx] = adjncy.len();
                    adjncy.push(cx as u32);
                    ewgt.push(w);
                } else {
                    ewgt[slot[cx]] += w;
                }
            }
        }
        for &cx in &adjncy[row_start..] {
            slot[cx as usize] = usize::MAX;
        }
        // Sorted rows keep tie-breaking by node id meaningful on coarse levels.
        let mut row: Vec<(u32, f64)> = adjncy[row_start..].iter().copied().zip(ewgt[row_start..].iter().copied()).collect();
        row.sort_unstable_by_key(|&(x, _)| x);
        for (k, (x, w)) in row.into_iter().enumerate() {
            adjncy[row_start + k] = x;
            ewgt[row_start + k] = w;
        }
        vwgt.push(weight);
        xadj.push(adjncy.len());
    }
    (Graph::from_csr(xadj, adjncy, ewgt, vwgt), cmap)
}
