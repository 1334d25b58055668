//! Slab-wise binarization.
//!
//! The z-range is cut into `m` groups of consecutive slices. Each group is
//! smoothed and thresholded on its own histogram, which lets the threshold
//! follow illumination that drifts along the optical axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histmodel::{em_fit_with, gray_level, iterative_threshold_init, otsu_threshold, EmOptions, Histogram, HistogramModel};
use crate::voxel::{gaussian_smooth, Sample, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    Otsu,
    ModelThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarizationConfig {
    pub method: ThresholdMethod,
    /// Standard deviation of the Gaussian prefilter, in voxels. 0 disables it.
    #[serde(default)]
    pub sigma_s: f64,
    /// Number of slab groups along z.
    #[serde(default = "one", alias = "m")]
    pub slabs: usize,
}

fn one() -> usize {
    1
}

impl Default for BinarizationConfig {
    fn default() -> Self {
        BinarizationConfig {
            method: ThresholdMethod::ModelThreshold,
            sigma_s: 0.0,
            slabs: 1,
        }
    }
}

impl BinarizationConfig {
    pub fn validate(&self, depth: usize) -> Result<()> {
        if !(self.sigma_s >= 0.0 && self.sigma_s.is_finite()) {
            return Err(Error::invalid("sigma_s", format!("{} is negative or not finite", self.sigma_s)));
        }
        if self.slabs == 0 || self.slabs > depth {
            return Err(Error::invalid("slabs", format!("{} outside 1..={depth}", self.slabs)));
        }
        Ok(())
    }
}

/// Threshold and model of one slab group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabReport {
    /// Slices `z0..z1`.
    pub z_range: [usize; 2],
    /// Gray level at or below which voxels are background.
    pub threshold: u32,
    pub foreground_voxels: usize,
    /// Fitted mixture; present for the model threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<HistogramModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Binarization {
    /// 1 for foreground, 0 for background.
    pub mask: Volume<u8>,
    /// The prefiltered volume the thresholds were applied to.
    pub smoothed: Volume<f32>,
    pub slabs: Vec<SlabReport>,
}

impl Binarization {
    /// One histogram model per z-slice, fitting any slab that was
    /// thresholded without one.
    pub fn slice_models(&mut self) -> Result<Vec<HistogramModel>> {
        let mut out = Vec::with_capacity(self.smoothed.size()[2]);
        for slab in &mut self.slabs {
            let [z0, z1] = slab.z_range;
            let model = match slab.model {
                Some(m) => m,
                None => {
                    let h = Histogram::from_volume(&self.smoothed.slab(z0, z1)?)?;
                    let (m, iterations) = fit_model(&h)?;
                    slab.model = Some(m);
                    slab.em_iterations = Some(iterations);
                    m
                }
            };
            out.extend(std::iter::repeat_n(model, z1 - z0));
        }
        Ok(out)
    }
}

/// Splits `0..depth` into `m` contiguous ranges whose lengths differ by at
/// most one; the first ranges take the remainder.
pub fn slab_ranges(depth: usize, m: usize) -> Result<Vec<[usize; 2]>> {
    if m == 0 || m > depth {
        return Err(Error::invalid("slabs", format!("{m} outside 1..={depth}")));
    }
    let (base, extra) = (depth / m, depth % m);
    let mut z = 0;
    Ok((0..m)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let r = [z, z + len];
            z += len;
            r
        })
        .collect())
}

/// Initial guess by iterative thresholding, then EM. Returns the model and
/// the number of EM iterations.
pub fn fit_model(h: &Histogram) -> Result<(HistogramModel, usize)> {
    let init = iterative_threshold_init(h)?;
    let trace = em_fit_with(h, &init, &EmOptions::default())?;
    Ok((trace.model, trace.iterations))
}

pub fn binarize<T: Sample>(v: &Volume<T>, cfg: &BinarizationConfig) -> Result<Binarization> {
    let [sx, sy, sz] = v.size();
    cfg.validate(sz)?;
    let ranges = slab_ranges(sz, cfg.slabs)?;

    let slabs: Vec<(Vec<u8>, Volume<f32>, SlabReport)> = ranges
        .par_iter()
        .map(|&[z0, z1]| {
            let smoothed = gaussian_smooth(&v.slab(z0, z1)?, cfg.sigma_s)?;
            let h = Histogram::from_volume(&smoothed)?;
            let (threshold, model, em_iterations) = match cfg.method {
                ThresholdMethod::Otsu => (otsu_threshold(&h)?, None, None),
                ThresholdMethod::ModelThreshold => {
                    let (m, it) = fit_model(&h)?;
                    (m.threshold()?, Some(m), Some(it))
                }
            };
            let mask: Vec<u8> = smoothed
                .data()
                .iter()
                .map(|&s| u8::from(gray_level(s as f64) > threshold))
                .collect();
            let report = SlabReport {
                z_range: [z0, z1],
                threshold,
                foreground_voxels: mask.iter().filter(|&&b| b == 1).count(),
                model,
                em_iterations,
            };
            Ok((mask, smoothed, report))
        })
        .collect::<Result<_>>()?;

    let mut mask = Vec::with_capacity(sx * sy * sz);
    let mut smooth = Vec::with_capacity(sx * sy * sz);
    let mut reports = Vec::with_capacity(slabs.len());
    for (m, s, r) in slabs {
        mask.extend(m);
        smooth.extend(s.into_data());
        reports.push(r);
    }
    Ok(Binarization {
        mask: Volume::new(v.size(), v.spacing(), mask)?,
        smoothed: Volume::new(v.size(), v.spacing(), smooth)?,
        slabs: reports,
    })
}
