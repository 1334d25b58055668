//! Gray-level histograms and their thresholds.
//!
//! Two binarization thresholds are provided: Otsu's between-class variance
//! maximizer, and the crossover of a fitted background/foreground mixture
//! ([`HistogramModel`]) whose background carries an extra "illuminated"
//! term for the halo that optical blur leaves around bright objects.

mod em;
mod model;

pub use em::{em_fit, em_fit_with, EmOptions, EmTrace};
pub use model::{HistogramModel, ModelTerms, POSTERIOR_FLOOR};

use crate::error::{Error, Result};
use crate::voxel::{Sample, Volume};

/// Largest gray level a histogram will index; higher samples saturate.
pub const MAX_LEVEL: u32 = 1 << 20;

/// Gray level of a sample: rounded, clamped to `0..=MAX_LEVEL`.
#[inline]
pub fn gray_level(v: f64) -> u32 {
    if v.is_nan() || v <= 0.0 {
        0
    } else {
        (v.round() as u64).min(MAX_LEVEL as u64) as u32
    }
}

/// Absolute frequencies of gray levels `0..=max_level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::DegenerateHistogram("histogram is empty".into()));
        }
        let mut counts = counts;
        while counts.last() == Some(&0) {
            counts.pop();
        }
        Ok(Histogram { counts, total })
    }

    pub fn from_levels(levels: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut counts = Vec::new();
        for l in levels {
            let l = l as usize;
            if l >= counts.len() {
                counts.resize(l + 1, 0);
            }
            counts[l] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_volume<T: Sample>(v: &Volume<T>) -> Result<Self> {
        Self::from_levels(v.data().iter().map(|s| gray_level(s.to_f64())))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Highest occupied gray level.
    pub fn max_level(&self) -> u32 {
        (self.counts.len() - 1) as u32
    }

    /// Normalized frequency `h(i)`.
    pub fn frequency(&self, level: usize) -> f64 {
        self.counts.get(level).map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    pub fn occupied_levels(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| i as f64 * c as f64)
            .sum();
        s / self.total as f64
    }

    fn require_two_levels(&self) -> Result<()> {
        if self.occupied_levels() < 2 {
            return Err(Error::DegenerateHistogram(format!(
                "only {} occupied gray level(s); no valid split",
                self.occupied_levels()
            )));
        }
        Ok(())
    }
}

/// Relative slack under which two between-class variances count as tied.
pub const OTSU_TIE_TOLERANCE: f64 = 1e-12;

/// Otsu's threshold: the level `t` maximizing the between-class variance of
/// the split `{i <= t} | {i > t}`. Ties go to the smaller `t`.
pub fn otsu_threshold(h: &Histogram) -> Result<u32> {
    h.require_two_levels()?;
    let n = h.total as i128;
    let s: i128 = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| i as i128 * c as i128)
        .sum();
    let (mut n0, mut s0) = (0i128, 0i128);
    let mut best: Option<(u32, f64)> = None;
    // Every t with both classes non-empty; the last level always belongs to class 1.
    for (t, &c) in h.counts[..h.counts.len() - 1].iter().enumerate() {
        n0 += c as i128;
        s0 += t as i128 * c as i128;
        if n0 == 0 || n0 == n {
            continue;
        }
        // (s0*N - S*n0)^2 / (N^2 n0 n1) is exact up to the final float ops.
        let d = (s0 * n - s * n0) as f64;
        let var = d * d / ((n as f64).powi(2) * n0 as f64 * (n - n0) as f64);
        match best {
            Some((_, b)) if var <= b * (1.0 + OTSU_TIE_TOLERANCE) => {}
            _ => best = Some((t as u32, var)),
        }
    }
    Ok(best.expect("two occupied levels give at least one split").0)
}

/// Ridler-Calvard iterative threshold, used to seed the EM fit.
///
/// Starting at the histogram mean, `t` becomes the average of the class means
/// below and above it until the split stops changing (at most 100 rounds).
/// Means and masses of the final classes initialize the model; both standard
/// deviations start at 1 and the blur rate at 0.01.
pub fn iterative_threshold_init(h: &Histogram) -> Result<HistogramModel> {
    h.require_two_levels()?;
    let class_stats = |t: f64| {
        let (mut n0, mut s0, mut n1, mut s1) = (0.0, 0.0, 0.0, 0.0);
        for (i, &c) in h.counts.iter().enumerate() {
            let (i, c) = (i as f64, c as f64);
            if i <= t {
                n0 += c;
                s0 += i * c;
            } else {
                n1 += c;
                s1 += i * c;
            }
        }
        (n0, s0, n1, s1)
    };
    let mut t = h.mean();
    let mut stats = class_stats(t);
    for _ in 0..100 {
        let (n0, s0, n1, s1) = stats;
        if n0 == 0.0 || n1 == 0.0 {
            return Err(Error::DegenerateHistogram("iterative threshold emptied a class".into()));
        }
        let next = 0.5 * (s0 / n0 + s1 / n1);
        let same_split = next.floor() == t.floor();
        t = next;
        if same_split {
            break;
        }
        stats = class_stats(t);
    }
    let (n0, s0, n1, s1) = stats;
    let total = h.total as f64;
    Ok(HistogramModel {
        p_b: n0 / total,
        mu_b: s0 / n0,
        sigma_b: 1.0,
        p_f: n1 / total,
        mu_f: s1 / n1,
        sigma_f: 1.0,
        alpha: 0.01,
    })
}
