use nucseg::graphbuild::{build_graph, EdgeScheme, EdgeWeightConfig};
use nucseg::partition::Graph;
use nucseg::voxel::{Component, Volume, VoxelCoord};

const CONST: EdgeWeightConfig = EdgeWeightConfig {
    scheme: EdgeScheme::Const,
    sigma_grad: 1.0,
};

/// A cube of physical side 20 digitized on spacing (1, 2, 5).
fn anisotropic_cube() -> (Component, Volume<f32>) {
    let spacing = [1.0, 2.0, 5.0];
    let size = [20, 10, 4];
    let mut voxels = Vec::new();
    for z in 0..size[2] {
        for y in 0..size[1] {
            for x in 0..size[0] {
                voxels.push(VoxelCoord::new(x, y, z));
            }
        }
    }
    let v = Volume::filled(size, spacing, 1.0f32).unwrap();
    (Component::new(1, voxels), v)
}

#[test]
fn planar_cut_weight_is_orientation_invariant() {
    let (c, v) = anisotropic_cube();
    let g = build_graph(&c, &v, &[], &CONST).unwrap();
    let cut_at = |axis: usize| {
        let mid = v.size()[axis] / 2;
        let side: Vec<u8> = g.node_coords.iter().map(|p| u8::from(p.as_array()[axis] >= mid)).collect();
        g.graph.cut_weight(&side)
    };
    let (x, y, z) = (cut_at(0), cut_at(1), cut_at(2));
    // Every cross-section has physical area 400; the cut is area / voxel volume.
    for w in [x, y, z] {
        assert!((w - 40.0).abs() < 1e-9, "{x} {y} {z}");
    }
}

#[test]
fn grad_weights_lie_in_unit_interval() {
    let (c, mut v) = anisotropic_cube();
    for (i, s) in v.data_mut().iter_mut().enumerate() {
        *s = ((i * 37) % 251) as f32;
    }
    let cfg = EdgeWeightConfig {
        scheme: EdgeScheme::Grad,
        sigma_grad: 15.0,
    };
    let g = build_graph(&c, &v, &[], &cfg).unwrap();
    // Divided by the edge length, the largest possible weight is 1 / min spacing.
    assert!(g.graph.edges().all(|(_, _, w)| w > 0.0 && w <= 1.0));
}

#[test]
fn graph_is_symmetric_and_dumps_edge_list() {
    let (c, v) = anisotropic_cube();
    let g = build_graph(&c, &v, &[], &CONST).unwrap();
    for u in 0..g.node_count() {
        for (v, w) in g.graph.neighbors(u) {
            assert!(g.graph.neighbors(v).any(|(x, wx)| x == u && wx == w));
            assert_eq!(g.node_coords[u].as_array().iter().zip(g.node_coords[v].as_array()).filter(|(a, b)| **a != *b).count(), 1);
        }
    }
    let text = g.graph.to_edge_list();
    assert_eq!(text.lines().count(), g.edge_count());
    assert_eq!(Graph::from_edge_list(g.node_count(), &text).unwrap(), g.graph);
}
