use std::collections::VecDeque;

use super::{neighbors_26, LocalIndex, Volume, VoxelCoord, NEIGHBORS_6};

/// Voxel adjacency used for component extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Six,
    TwentySix,
}

impl Connectivity {
    fn offsets(self) -> Vec<[i64; 3]> {
        match self {
            Connectivity::Six => NEIGHBORS_6.to_vec(),
            Connectivity::TwentySix => neighbors_26().collect(),
        }
    }
}

/// A connected set of voxels. Voxels are kept sorted in scan order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: usize,
    pub voxels: Vec<VoxelCoord>,
}

impl Component {
    /// Builds a component, sorting the voxels into scan order.
    pub fn new(id: usize, mut voxels: Vec<VoxelCoord>) -> Self {
        voxels.sort_unstable_by_key(|v| v.scan_key());
        Component { id, voxels }
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// First voxel in scan order.
    pub fn first(&self) -> Option<VoxelCoord> {
        self.voxels.first().copied()
    }
}

/// Labels the maximal connected sets of nonzero voxels.
///
/// Components are numbered from 1 in the scan order of their first voxel.
pub fn connected_components(mask: &Volume<u8>, connectivity: Connectivity) -> Vec<Component> {
    let [sx, sy, sz] = mask.size();
    let offsets = connectivity.offsets();
    let mut visited = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..mask.len() {
        if mask.data()[start] == 0 || visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let mut voxels = Vec::new();
        while let Some(o) = queue.pop_front() {
            let c = mask.coord(o);
            voxels.push(c);
            for d in &offsets {
                let (nx, ny, nz) = (c.x as i64 + d[0], c.y as i64 + d[1], c.z as i64 + d[2]);
                if nx < 0 || ny < 0 || nz < 0 {
                    continue;
                }
                let (nx, ny, nz) = (nx as usize, ny as usize, nz as usize);
                if nx >= sx || ny >= sy || nz >= sz {
                    continue;
                }
                let n = mask.offset(nx, ny, nz);
                if mask.data()[n] != 0 && !visited[n] {
                    visited[n] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(Component::new(out.len() + 1, voxels));
    }
    out
}

/// Voxels of `c` with at least one 6-neighbor outside `c`.
///
/// Positions outside the volume count as outside, so the test depends on the
/// component alone.
pub fn component_border(c: &Component) -> Vec<VoxelCoord> {
    let index = LocalIndex::new(&c.voxels);
    let strides: Vec<isize> = NEIGHBORS_6.iter().map(|&d| index.stride(d)).collect();
    c.voxels
        .iter()
        .copied()
        .filter(|&v| {
            let cell = index.cell_of(v) as isize;
            strides.iter().any(|s| index.at((cell + s) as usize).is_none())
        })
        .collect()
}
