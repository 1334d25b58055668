//! Object-level error counts of a label volume against ground truth.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::Volume;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorCount {
    pub count: usize,
    /// `100 * count / gt_count`; 0 when there is no ground truth.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gt_count: usize,
    pub predicted_count: usize,
    pub added: ErrorCount,
    pub missed: ErrorCount,
    pub merged: ErrorCount,
    pub split: ErrorCount,
}

impl EvalReport {
    pub fn total_errors(&self) -> usize {
        self.added.count + self.missed.count + self.merged.count + self.split.count
    }

    pub fn total_percent(&self) -> f64 {
        self.added.percent + self.missed.percent + self.merged.percent + self.split.percent
    }
}

impl fmt::Display for EvalReport {
    /// One header row and one value row, percentages of the ground-truth count.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "gt", "pred", "added", "missed", "merged", "split"
        )?;
        writeln!(
            f,
            "{:>8} {:>8} {:>7.1}% {:>7.1}% {:>7.1}% {:>7.1}%",
            self.gt_count,
            self.predicted_count,
            self.added.percent,
            self.missed.percent,
            self.merged.percent,
            self.split.percent
        )
    }
}

/// Label holding the most voxels of each object; ties go to the smaller label.
fn plurality(overlap: &BTreeMap<(u32, u32), usize>, flip: bool) -> HashMap<u32, u32> {
    let mut best: HashMap<u32, (usize, u32)> = HashMap::new();
    for (&(a, b), &n) in overlap {
        let (key, other) = if flip { (b, a) } else { (a, b) };
        if key == 0 {
            continue;
        }
        let e = best.entry(key).or_insert((n, other));
        if n > e.0 || (n == e.0 && other < e.1) {
            *e = (n, other);
        }
    }
    best.into_iter().map(|(k, (_, v))| (k, v)).collect()
}

/// Compares `pred` to `truth` by plurality overlap in both directions.
///
/// A truth nucleus whose plurality is background is missed; a predicted
/// object whose plurality is background is added. A predicted object that
/// is the plurality match of k > 1 nuclei contributes k - 1 merges, and a
/// nucleus that is the plurality match of k > 1 objects k - 1 splits.
pub fn evaluate(pred: &Volume<u32>, truth: &Volume<u32>) -> Result<EvalReport> {
    if pred.size() != truth.size() {
        return Err(Error::SizeMismatch(pred.size(), truth.size()));
    }
    // (truth, pred) -> voxels
    let mut overlap: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&t, &p) in truth.data().iter().zip(pred.data()) {
        if t != 0 || p != 0 {
            *overlap.entry((t, p)).or_default() += 1;
        }
    }
    let gt_best = plurality(&overlap, false);
    let pred_best = plurality(&overlap, true);

    let missed = gt_best.values().filter(|&&o| o == 0).count();
    let added = pred_best.values().filter(|&&g| g == 0).count();
    let excess = |m: &HashMap<u32, u32>| {
        let mut hits: HashMap<u32, usize> = HashMap::new();
        for &target in m.values().filter(|&&t| t != 0) {
            *hits.entry(target).or_default() += 1;
        }
        hits.values().map(|&k| k - 1).sum::<usize>()
    };
    let merged = excess(&gt_best);
    let split = excess(&pred_best);

    let gt_count = gt_best.len();
    let pct = |count: usize| ErrorCount {
        count,
        percent: if gt_count == 0 { 0.0 } else { 100.0 * count as f64 / gt_count as f64 },
    };
    Ok(EvalReport {
        gt_count,
        predicted_count: pred_best.len(),
        added: pct(added),
        missed: pct(missed),
        merged: pct(merged),
        split: pct(split),
    })
}
