//! Surface area, volume and sphericity of voxel sets on anisotropic grids.
//!
//! Surface area uses Cauchy-Crofton cut metrics: every lattice direction `k`
//! of the 26-neighborhood owns the Voronoi cell `Phi_k` of its scaled unit
//! vector on the sphere, and each boundary voxel pair along `k` contributes
//!
//! ```text
//! w_k = Phi_k * drho_k / pi,   drho_k = (dx * dy * dz) / |e_k|
//! ```
//!
//! where `drho_k` is the cross-section owned by one lattice line of family
//! `k`. The `1/pi` comes from the 3D line measure: for a plane of area `A`,
//! integrating `A |n . u|` over a half-sphere of directions gives `pi * A`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::voxel::{neighbors_26, LocalIndex, Spacing, VoxelCoord, NEIGHBORS_6};

/// Sphere samples used to estimate Voronoi solid angles (each is also
/// counted through its antipode).
pub const SPHERE_SAMPLES: usize = 1 << 20;

/// Cut-metric weight of one lattice direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionWeight {
    pub offset: [i64; 3],
    /// Directed Voronoi cell solid angle over the full sphere, as a fraction of `4 pi`.
    pub fraction: f64,
    /// Edge weight in physical area units.
    pub omega: f64,
}

/// Per-direction cut-metric weights for a neighborhood and spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct CutMetricWeights {
    pub spacing: Spacing,
    pub directions: Vec<DirectionWeight>,
}

impl CutMetricWeights {
    /// Weight for a neighbor offset, if the offset is part of the neighborhood.
    pub fn omega(&self, offset: [i64; 3]) -> Option<f64> {
        self.directions.iter().find(|d| d.offset == offset).map(|d| d.omega)
    }

    /// Sum of all directed weights: the area assigned to an isolated voxel.
    pub fn single_voxel_area(&self) -> f64 {
        self.directions.iter().map(|d| d.omega).sum()
    }
}

/// Cut-metric weights of the 26-neighborhood.
pub fn cut_metric_weights(spacing: Spacing) -> CutMetricWeights {
    let offsets: Vec<[i64; 3]> = neighbors_26().collect();
    cut_metric_weights_for(spacing, &offsets)
}

/// Cut-metric weights for the 6-neighborhood. Too coarse for area estimates;
/// kept for validation.
pub fn cut_metric_weights_6(spacing: Spacing) -> CutMetricWeights {
    cut_metric_weights_for(spacing, &NEIGHBORS_6)
}

/// Cut-metric weights for an arbitrary centrally symmetric neighborhood.
pub fn cut_metric_weights_for(spacing: Spacing, offsets: &[[i64; 3]]) -> CutMetricWeights {
    let units: Vec<[f64; 3]> = offsets
        .iter()
        .map(|o| {
            let p = [o[0] as f64 * spacing[0], o[1] as f64 * spacing[1], o[2] as f64 * spacing[2]];
            let n = norm(p);
            [p[0] / n, p[1] / n, p[2] / n]
        })
        .collect();
    let opposite: Vec<usize> = offsets
        .iter()
        .map(|o| {
            offsets
                .iter()
                .position(|q| q == &[-o[0], -o[1], -o[2]])
                .expect("neighborhood must be centrally symmetric")
        })
        .collect();

    let counts = (0..SPHERE_SAMPLES)
        .into_par_iter()
        .fold(
            || vec![0u64; offsets.len()],
            |mut acc, i| {
                let p = fibonacci_point(i, SPHERE_SAMPLES);
                let k = nearest(&units, p);
                acc[k] += 1;
                // The antipode falls in the opposite cell.
                acc[opposite[k]] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; offsets.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let cell_volume: f64 = spacing.iter().product();
    let samples = 2.0 * SPHERE_SAMPLES as f64;
    let directions = offsets
        .iter()
        .zip(&counts)
        .map(|(&offset, &c)| {
            let fraction = c as f64 / samples;
            let length = norm([
                offset[0] as f64 * spacing[0],
                offset[1] as f64 * spacing[1],
                offset[2] as f64 * spacing[2],
            ]);
            let solid_angle = 4.0 * PI * fraction;
            let drho = cell_volume / length;
            DirectionWeight {
                offset,
                fraction,
                omega: solid_angle * drho / PI,
            }
        })
        .collect();
    CutMetricWeights { spacing, directions }
}

fn norm(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Point `i` of an `n`-point Fibonacci lattice on the unit sphere.
pub(crate) fn fibonacci_point(i: usize, n: usize) -> [f64; 3] {
    let golden = PI * (3.0 - 5.0f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    [r * phi.cos(), r * phi.sin(), z]
}

fn nearest(units: &[[f64; 3]], p: [f64; 3]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, u) in units.iter().enumerate() {
        let d = u[0] * p[0] + u[1] * p[1] + u[2] * p[2];
        if d > best.1 {
            best = (k, d);
        }
    }
    best.0
}

/// Physical volume of `n` voxels.
pub fn volume_of(n: usize, spacing: Spacing) -> f64 {
    n as f64 * spacing[0] * spacing[1] * spacing[2]
}

/// Cut-metric surface area of a voxel set: the summed weights of all
/// neighbor pairs with one voxel inside and one outside the set. Positions
/// outside the image count as outside.
pub fn surface_area(voxels: &[VoxelCoord], weights: &CutMetricWeights) -> f64 {
    let index = LocalIndex::new(voxels);
    let probes: Vec<(isize, f64)> = weights
        .directions
        .iter()
        .map(|d| (index.stride(d.offset), d.omega))
        .collect();
    voxels
        .iter()
        .map(|&v| {
            let cell = index.cell_of(v) as isize;
            probes
                .iter()
                .filter(|(s, _)| index.at((cell + s) as usize).is_none())
                .map(|(_, w)| w)
                .sum::<f64>()
        })
        .sum()
}

/// Sphericity from volume and area: the area of the equal-volume sphere
/// divided by `area`.
pub fn sphericity_from(volume: f64, area: f64) -> f64 {
    PI.cbrt() * (6.0 * volume).powf(2.0 / 3.0) / area
}

/// Sphericity of a non-empty voxel set.
pub fn sphericity(voxels: &[VoxelCoord], weights: &CutMetricWeights) -> f64 {
    let v = volume_of(voxels.len(), weights.spacing);
    sphericity_from(v, surface_area(voxels, weights))
}
