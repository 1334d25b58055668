//! Seeded synthetic nuclei scenes with ground truth.
//!
//! Nuclei are axis-aligned ellipsoids. A share of them is placed in contact
//! with an earlier one, which produces the touching clusters the splitter
//! has to take apart. The image is the occupancy scaled between the
//! background and foreground levels, blurred by a Gaussian PSF, attenuated
//! along z, and corrupted by additive Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::{gaussian_smooth_axes, Spacing, Volume, VoxelCoord};

/// Attempts per nucleus before placement is declared infeasible.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub size: [usize; 3],
    pub spacing: Spacing,
    pub nucleus_count: usize,
    /// Smallest semi-axes along x, y, z, in physical units.
    pub semi_axes_min: [f64; 3],
    pub semi_axes_max: [f64; 3],
    /// Probability that a nucleus is placed touching an earlier one.
    #[serde(default)]
    pub clustering: f64,
    pub mu_b: f64,
    pub mu_f: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Standard deviation of the PSF along x, y, z, in physical units.
    #[serde(default)]
    pub psf_sigma: [f64; 3],
    /// Signal gain at the first and the last slice, interpolated linearly.
    #[serde(default = "unit_gain")]
    pub gain: [f64; 2],
    /// Physical clearance kept between nuclei that are not clustered.
    #[serde(default)]
    pub min_gap: f64,
    #[serde(default)]
    pub seed: u64,
}

fn unit_gain() -> [f64; 2] {
    [1.0, 1.0]
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size.iter().any(|&s| s == 0) {
            return Err(Error::invalid("size", format!("{:?} has a zero extent", self.size)));
        }
        if self.spacing.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("spacing", format!("{:?} must be positive", self.spacing)));
        }
        for k in 0..3 {
            let (lo, hi) = (self.semi_axes_min[k], self.semi_axes_max[k]);
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::invalid("semi_axes_min", format!("axis {k}: need 0 < min <= max, got ({lo}, {hi})")));
            }
            let extent = (self.size[k] - 1) as f64 * self.spacing[k];
            if 2.0 * hi > extent {
                return Err(Error::invalid(
                    "semi_axes_max",
                    format!("axis {k}: ellipsoid of semi-axis {hi} does not fit in extent {extent}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.clustering) {
            return Err(Error::invalid("clustering", format!("{} outside [0, 1]", self.clustering)));
        }
        if !(self.mu_b < self.mu_f) {
            return Err(Error::invalid("mu_f", format!("mu_b = {} must be below mu_f = {}", self.mu_b, self.mu_f)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be non-negative"));
        }
        if self.psf_sigma.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("psf_sigma", "must be non-negative"));
        }
        if self.gain.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::invalid("gain", "must be positive"));
        }
        if !(self.min_gap >= 0.0) {
            return Err(Error::invalid("min_gap", "must be non-negative"));
        }
        Ok(())
    }
}

/// One placed nucleus, in physical coordinates of voxel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub label: u32,
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    /// Label of the nucleus this one was placed against.
    pub touching: Option<u32>,
}

impl NucleusSpec {
    /// Distance from the center to the surface along unit direction `d`.
    fn radius_along(&self, d: [f64; 3]) -> f64 {
        let q: f64 = (0..3).map(|k| (d[k] / self.semi_axes[k]).powi(2)).sum();
        1.0 / q.sqrt()
    }

    pub fn analytic_volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.semi_axes.iter().product::<f64>()
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).map(|k| ((p[k] - self.center[k]) / self.semi_axes[k]).powi(2)).sum::<f64>() <= 1.0
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub intensity: Volume<u16>,
    /// Nucleus labels from 1; 0 is background.
    pub truth: Volume<u32>,
    pub nuclei: Vec<NucleusSpec>,
}

fn unit_vector<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.map(|x| x / n);
        }
    }
}

fn place<R: Rng>(cfg: &SceneConfig, placed: &[NucleusSpec], rng: &mut R) -> Result<NucleusSpec> {
    // Voxel i is centered at i * spacing, so centers span [0, (size - 1) * spacing].
    let extent: [f64; 3] = std::array::from_fn(|k| (cfg.size[k] - 1) as f64 * cfg.spacing[k]);
    let min_step = cfg.spacing.iter().copied().fold(f64::INFINITY, f64::min);
    let label = placed.len() as u32 + 1;
    let clustered = !placed.is_empty() && rng.random_bool(cfg.clustering);
    for _ in 0..MAX_REJECTIONS {
        let semi_axes: [f64; 3] = std::array::from_fn(|k| rng.random_range(cfg.semi_axes_min[k]..=cfg.semi_axes_max[k]));
        let mut spec = NucleusSpec {
            label,
            center: [0.0; 3],
            semi_axes,
            touching: None,
        };
        if clustered {
            let anchor = placed[rng.random_range(0..placed.len())];
            let d = unit_vector(rng);
            let overlap = rng.random_range(0.0..=2.0) * min_step;
            let dist = anchor.radius_along(d) + spec.radius_along(d) - overlap;
            spec.center = std::array::from_fn(|k| anchor.center[k] + d[k] * dist);
            spec.touching = Some(anchor.label);
        } else {
            spec.center = std::array::from_fn(|k| rng.random_range(semi_axes[k]..=extent[k] - semi_axes[k]));
        }
        let inside = (0..3).all(|k| spec.center[k] - semi_axes[k] >= 0.0 && spec.center[k] + semi_axes[k] <= extent[k]);
        if !inside {
            continue;
        }
        let clear = placed.iter().all(|other| {
            let delta: [f64; 3] = std::array::from_fn(|k| spec.center[k] - other.center[k]);
            let dist = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
            if dist < 1e-9 {
                return false;
            }
            let d = delta.map(|x| x / dist);
            let reach = spec.radius_along(d) + other.radius_along(d);
            if spec.touching == Some(other.label) {
                true
            } else {
                dist >= reach + cfg.min_gap
            }
        });
        if clear {
            return Ok(spec);
        }
    }
    Err(Error::Placement(format!(
        "nucleus {label} could not be placed after {MAX_REJECTIONS} attempts"
    )))
}

/// Generates a scene. The output is a pure function of `cfg`.
pub fn generate(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nuclei = Vec::with_capacity(cfg.nucleus_count);
    for _ in 0..cfg.nucleus_count {
        let spec = place(cfg, &nuclei, &mut rng)?;
        nuclei.push(spec);
    }

    let s = cfg.spacing;
    let mut truth = Volume::filled(cfg.size, s, 0u32)?;
    for n in &nuclei {
        let lo: [usize; 3] = std::array::from_fn(|k| ((n.center[k] - n.semi_axes[k]) / s[k]).floor().max(0.0) as usize);
        let hi: [usize; 3] = std::array::from_fn(|k| (((n.center[k] + n.semi_axes[k]) / s[k]).ceil() as usize).min(cfg.size[k] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if n.contains([x as f64 * s[0], y as f64 * s[1], z as f64 * s[2]]) {
                        truth.set(VoxelCoord::new(x, y, z), n.label);
                    }
                }
            }
        }
    }

    let occupancy = truth.map(|l| if l > 0 { cfg.mu_f as f32 } else { cfg.mu_b as f32 });
    let psf: [f64; 3] = std::array::from_fn(|k| cfg.psf_sigma[k] / s[k]);
    let mut signal = gaussian_smooth_axes(&occupancy, psf)?;

    let depth = cfg.size[2];
    let plane = cfg.size[0] * cfg.size[1];
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).map_err(|e| Error::invalid("noise_sigma", e.to_string()))?;
    for (z, slice) in signal.data_mut().chunks_mut(plane).enumerate() {
        let t = if depth > 1 { z as f64 / (depth - 1) as f64 } else { 0.0 };
        let gain = cfg.gain[0] + (cfg.gain[1] - cfg.gain[0]) * t;
        for v in slice {
            let eps = if cfg.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            *v = (*v as f64 * gain + eps) as f32;
        }
    }
    let intensity = signal.map(|v| (v as f64).round().clamp(0.0, u16::MAX as f64) as u16);
    Ok(Scene { intensity, truth, nuclei })
}
