use rayon::prelude::*;

use super::{Sample, Volume};
use crate::error::{Error, Result};

/// Normalized discrete Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with standard deviation `sigma` in voxel units.
///
/// Borders replicate the edge sample. `sigma == 0` returns the input converted
/// to `f32` unchanged.
pub fn gaussian_smooth<T: Sample>(v: &Volume<T>, sigma: f64) -> Result<Volume<f32>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma_s", format!("must be finite and >= 0, got {sigma}")));
    }
    gaussian_smooth_axes(v, [sigma; 3])
}

/// As [`gaussian_smooth`] with a separate standard deviation per axis.
pub fn gaussian_smooth_axes<T: Sample>(v: &Volume<T>, sigma: [f64; 3]) -> Result<Volume<f32>> {
    if let Some(s) = sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(Error::invalid("sigma", format!("must be finite and >= 0, got {s}")));
    }
    if sigma.iter().all(|&s| s == 0.0) {
        return Ok(v.to_f32());
    }
    let size = v.size();
    let mut a: Vec<f64> = v.data().iter().map(|s| s.to_f64()).collect();
    let mut b = vec![0.0; a.len()];
    for axis in 0..3 {
        if size[axis] > 1 && sigma[axis] > 0.0 {
            convolve_axis(&a, &mut b, size, axis, &gaussian_kernel(sigma[axis]));
            std::mem::swap(&mut a, &mut b);
        }
    }
    Ok(v.map_data(a.into_iter().map(|s| s as f32).collect()))
}

fn convolve_axis(src: &[f64], dst: &mut [f64], size: [usize; 3], axis: usize, kernel: &[f64]) {
    let [sx, sy, sz] = size;
    let plane = sx * sy;
    let radius = (kernel.len() / 2) as i64;
    let extent = size[axis] as i64;
    let stride = [1, sx, plane][axis];

    dst.par_chunks_mut(plane).enumerate().for_each(|(z, out)| {
        for y in 0..sy {
            for x in 0..sx {
                let pos = [x, y, z][axis] as i64;
                let base = x + sx * (y + sy * z) - pos as usize * stride;
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let p = (pos + k as i64 - radius).clamp(0, extent - 1) as usize;
                    acc += w * src[base + p * stride];
                }
                out[x + sx * y] = acc;
            }
        }
    });
    debug_assert_eq!(sz * plane, dst.len());
}

impl<T: Sample> Volume<T> {
    fn map_data<U: Sample>(&self, data: Vec<U>) -> Volume<U> {
        Volume::new(self.size(), self.spacing(), data).expect("same geometry")
    }
}
