//! Grid graphs over foreground components.
//!
//! Nodes are the voxels of a component in scan order; edges join 6-adjacent
//! voxels. A base weight from one of three schemes is divided by the
//! physical length of the edge so that the cut of a surface does not depend
//! on its orientation on anisotropic grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histmodel::HistogramModel;
use crate::partition::Graph;
use crate::voxel::{Component, LocalIndex, Volume, VoxelCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeScheme {
    /// `exp(-(I_u - I_v)^2 / (2 sigma_grad^2))`: cheap to cut across edges in the image.
    Grad,
    /// `-ln min(P(B|I_u), P(B|I_v))`: cheap to cut through likely background.
    Prob,
    /// Constant 1.
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeWeightConfig {
    pub scheme: EdgeScheme,
    #[serde(default = "default_sigma_grad")]
    pub sigma_grad: f64,
}

fn default_sigma_grad() -> f64 {
    15.0
}

impl Default for EdgeWeightConfig {
    fn default() -> Self {
        EdgeWeightConfig {
            scheme: EdgeScheme::Grad,
            sigma_grad: default_sigma_grad(),
        }
    }
}

impl EdgeWeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_grad > 0.0 && self.sigma_grad.is_finite()) {
            return Err(Error::invalid("sigma_grad", format!("{} is not positive", self.sigma_grad)));
        }
        Ok(())
    }
}

/// Weighted grid graph of one component. Node `i` is `node_coords[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentGraph {
    pub node_coords: Vec<VoxelCoord>,
    pub graph: Graph,
}

impl ComponentGraph {
    pub fn node_count(&self) -> usize {
        self.node_coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }
}

/// Builds the graph of `c` over `intensity`.
///
/// `models` feeds the `prob` scheme: either one model for the whole volume
/// or one per z-slice. Other schemes ignore it.
pub fn build_graph(
    c: &Component,
    intensity: &Volume<f32>,
    models: &[HistogramModel],
    cfg: &EdgeWeightConfig,
) -> Result<ComponentGraph> {
    cfg.validate()?;
    if c.is_empty() {
        return Err(Error::invalid("component", "is empty"));
    }
    let sz = intensity.size()[2];
    if cfg.scheme == EdgeScheme::Prob && !(models.len() == 1 || models.len() == sz) {
        return Err(Error::invalid(
            "models",
            format!("prob scheme needs 1 or {sz} histogram model(s), got {}", models.len()),
        ));
    }
    let spacing = intensity.spacing();
    let value = |v: VoxelCoord| intensity.get(v) as f64;
    let minus_log_bg = |v: VoxelCoord| {
        let m = if models.len() == 1 { &models[0] } else { &models[v.z] };
        -m.background_posterior(value(v)).ln()
    };
    let base = |u: VoxelCoord, v: VoxelCoord| -> f64 {
        match cfg.scheme {
            EdgeScheme::Const => 1.0,
            EdgeScheme::Grad => {
                let d = value(u) - value(v);
                (-d * d / (2.0 * cfg.sigma_grad * cfg.sigma_grad)).exp()
            }
            // -ln min(P, Q) = max(-ln P, -ln Q)
            EdgeScheme::Prob => minus_log_bg(u).max(minus_log_bg(v)),
        }
    };

    let index = LocalIndex::new(&c.voxels);
    // Neighbor offsets in increasing node-id order (scan order is z, y, x).
    let steps: [([i64; 3], usize); 6] = [
        ([0, 0, -1], 2),
        ([0, -1, 0], 1),
        ([-1, 0, 0], 0),
        ([1, 0, 0], 0),
        ([0, 1, 0], 1),
        ([0, 0, 1], 2),
    ];
    let strides = steps.map(|(d, axis)| (index.stride(d), spacing[axis]));

    let n = c.len();
    let mut xadj = Vec::with_capacity(n + 1);
    let mut adjncy = Vec::with_capacity(6 * n);
    let mut ewgt = Vec::with_capacity(6 * n);
    xadj.push(0);
    for &u in &c.voxels {
        let cell = index.cell_of(u) as isize;
        for &(stride, dist) in &strides {
            if let Some(j) = index.at((cell + stride) as usize) {
                let v = c.voxels[j];
                // Order the endpoints so both directions get bit-identical weights.
                let w = if u.scan_key() < v.scan_key() { base(u, v) } else { base(v, u) };
                adjncy.push(j as u32);
                ewgt.push(w / dist);
            }
        }
        xadj.push(adjncy.len());
    }
    Ok(ComponentGraph {
        node_coords: c.voxels.clone(),
        graph: Graph::from_csr(xadj, adjncy, ewgt, vec![1; n]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_voxels(a: f32, b: f32, spacing: [f64; 3], along_z: bool) -> (Component, Volume<f32>) {
        let size = if along_z { [1, 1, 2] } else { [2, 1, 1] };
        let v = Volume::new(size, spacing, vec![a, b]).unwrap();
        let second = if along_z { VoxelCoord::new(0, 0, 1) } else { VoxelCoord::new(1, 0, 0) };
        (Component::new(1, vec![VoxelCoord::new(0, 0, 0), second]), v)
    }

    fn only_weight(g: &ComponentGraph) -> f64 {
        let e: Vec<_> = g.graph.edges().collect();
        assert_eq!(e.len(), 1);
        e[0].2
    }

    #[test]
    fn grad_weights() {
        let cfg = EdgeWeightConfig {
            scheme: EdgeScheme::Grad,
            sigma_grad: 15.0,
        };
        let (c, v) = two_voxels(100.0, 100.0, [1.0; 3], false);
        assert_eq!(only_weight(&build_graph(&c, &v, &[], &cfg).unwrap()), 1.0);
        let (c, v) = two_voxels(100.0, 115.0, [1.0; 3], false);
        let w = only_weight(&build_graph(&c, &v, &[], &cfg).unwrap());
        assert!((w - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn z_edges_are_divided_by_spacing() {
        let cfg = EdgeWeightConfig {
            scheme: EdgeScheme::Const,
            sigma_grad: 1.0,
        };
        let (c, v) = two_voxels(0.0, 0.0, [1.0, 1.0, 5.0], true);
        assert_eq!(only_weight(&build_graph(&c, &v, &[], &cfg).unwrap()), 0.2);
    }

    #[test]
    fn prob_weight_is_zero_for_sure_background() {
        let m = HistogramModel {
            p_b: 0.9,
            mu_b: 20.0,
            sigma_b: 5.0,
            p_f: 0.1,
            mu_f: 180.0,
            sigma_f: 15.0,
            alpha: 0.02,
        };
        let cfg = EdgeWeightConfig {
            scheme: EdgeScheme::Prob,
            sigma_grad: 1.0,
        };
        let (c, v) = two_voxels(20.0, 20.0, [1.0; 3], false);
        let w = only_weight(&build_graph(&c, &v, &[m], &cfg).unwrap());
        assert!(w.abs() < 1e-9, "{w}");
        let (c, v) = two_voxels(20.0, 180.0, [1.0; 3], false);
        let w = only_weight(&build_graph(&c, &v, &[m], &cfg).unwrap());
        assert!((w + m.background_posterior(180.0).ln()).abs() < 1e-12);
        assert!(w > 10.0);
        assert!(build_graph(&c, &v, &[], &cfg).is_err());
    }

    #[test]
    fn counts_match_component() {
        let mut voxels = Vec::new();
        for z in 0..3 {
            for y in 0..3 {
                for x in 0..4 {
                    voxels.push(VoxelCoord::new(x, y, z));
                }
            }
        }
        let c = Component::new(1, voxels);
        let v = Volume::filled([4, 3, 3], [1.0; 3], 7.0f32).unwrap();
        let g = build_graph(&c, &v, &[], &EdgeWeightConfig::default()).unwrap();
        assert_eq!(g.node_count(), 36);
        // Interior 6-adjacencies of a 4 x 3 x 3 block.
        assert_eq!(g.edge_count(), 3 * 3 * 3 + 4 * 2 * 3 + 4 * 3 * 2);
        assert_eq!(g.node_coords, c.voxels);
    }
}
