//! Recursive splitting of foreground components and the full pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::{binarize, BinarizationConfig, SlabReport};
use crate::error::Result;
use crate::geometry::{cut_metric_weights, sphericity, volume_of, CutMetricWeights};
use crate::graphbuild::{build_graph, EdgeScheme, EdgeWeightConfig};
use crate::histmodel::HistogramModel;
use crate::nucmodel::{decide, Decision, NucleusModelParams};
use crate::partition::{bipartition, split_blocks, PartitionerConfig};
use crate::voxel::{connected_components, Component, Connectivity, Sample, Volume};

/// Settings of every pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub binarization: BinarizationConfig,
    #[serde(default)]
    pub weights: EdgeWeightConfig,
    #[serde(default)]
    pub partition: PartitionerConfig,
    pub model: NucleusModelParams,
}

impl PipelineConfig {
    /// Validates every stage against a volume of `depth` slices. The
    /// nucleus model takes its imbalance factor from the partitioner.
    pub fn validate(&self, depth: usize) -> Result<()> {
        self.binarization.validate(depth)?;
        self.weights.validate()?;
        self.partition.validate()?;
        self.model.validate()
    }

    fn nucleus_params(&self) -> NucleusModelParams {
        NucleusModelParams {
            epsilon: self.partition.epsilon,
            ..self.model
        }
    }
}

/// Read-only state shared by every split of one volume.
pub struct SplitContext<'a> {
    pub intensity: &'a Volume<f32>,
    /// Per-slice histogram models (may be empty unless weights use `prob`).
    pub models: &'a [HistogramModel],
    pub weights: EdgeWeightConfig,
    pub partition: PartitionerConfig,
    pub params: NucleusModelParams,
    pub metric: CutMetricWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeptComponent {
    pub component: Component,
    pub volume: f64,
    pub sphericity: f64,
    pub score: f64,
}

struct Scored {
    decision: Decision,
    score: f64,
    volume: f64,
    sphericity: f64,
}

impl SplitContext<'_> {
    fn score(&self, c: &Component, s_parent: f64) -> Scored {
        let volume = volume_of(c.len(), self.intensity.spacing());
        let mut psi = f64::NAN;
        let d = decide(
            volume,
            || {
                psi = sphericity(&c.voxels, &self.metric);
                psi
            },
            s_parent,
            &self.params,
        );
        Scored {
            decision: d.decision,
            score: d.score,
            volume,
            sphericity: psi,
        }
    }

    fn kept(c: Component, s: &Scored) -> KeptComponent {
        KeptComponent {
            component: c,
            volume: s.volume,
            sphericity: s.sphericity,
            score: s.score,
        }
    }

    /// Per-call partitioner seed, fixed by the component so that results
    /// do not depend on processing order.
    fn seed_for(&self, c: &Component) -> u64 {
        let first = c.first().map_or(0, |v| self.intensity.offset(v.x, v.y, v.z) as u64);
        splitmix(self.partition.seed ^ splitmix(first ^ ((c.len() as u64) << 40)))
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Scores a foreground component from the binarization (parent score 0)
/// and splits it as far as the nucleus model asks.
pub fn segment_component(c: Component, ctx: &SplitContext) -> Result<Vec<KeptComponent>> {
    let s = ctx.score(&c, 0.0);
    Ok(match s.decision {
        Decision::Keep => vec![SplitContext::kept(c, &s)],
        Decision::Discard => Vec::new(),
        Decision::Repartition => {
            let kept = recursive_split(&c, s.score, ctx)?;
            if kept.is_empty() && s.score > 0.0 {
                vec![SplitContext::kept(c, &s)]
            } else {
                kept
            }
        }
    })
}

/// Bipartitions `c`, whose own score is `s_c`, and scores every connected
/// part against it. Parts marked for repartitioning recurse; a part whose
/// recursion keeps nothing is kept itself if its score is positive.
///
/// Returns the kept descendants, possibly none.
pub fn recursive_split(c: &Component, s_c: f64, ctx: &SplitContext) -> Result<Vec<KeptComponent>> {
    if c.len() < 2 {
        return Ok(Vec::new());
    }
    let g = build_graph(c, ctx.intensity, ctx.models, &ctx.weights)?;
    let cfg = PartitionerConfig {
        seed: ctx.seed_for(c),
        ..ctx.partition
    };
    let b = bipartition(&g.graph, &cfg)?;
    let parts = split_blocks(c, &b);
    if parts.len() < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for p in parts {
        let s = ctx.score(&p, s_c);
        match s.decision {
            Decision::Keep => out.push(SplitContext::kept(p, &s)),
            Decision::Discard => {}
            Decision::Repartition => {
                let sub = recursive_split(&p, s.score, ctx)?;
                if sub.is_empty() {
                    if s.score > 0.0 {
                        out.push(SplitContext::kept(p, &s));
                    }
                } else {
                    out.extend(sub);
                }
            }
        }
    }
    Ok(out)
}

/// Per-object line of the segmentation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: u32,
    pub voxel_count: usize,
    pub volume: f64,
    pub sphericity: f64,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    /// 0 for background, objects numbered from 1.
    pub labels: Volume<u32>,
    pub objects: Vec<ObjectRecord>,
    pub slabs: Vec<SlabReport>,
    /// Foreground components found after binarization.
    pub components: usize,
}

/// Binarizes `v`, then splits each foreground component.
///
/// Components are processed on the current rayon pool; the result does not
/// depend on the number of threads.
pub fn segment<T: Sample>(v: &Volume<T>, cfg: &PipelineConfig) -> Result<SegmentationResult> {
    cfg.validate(v.size()[2])?;
    let mut bin = binarize(v, &cfg.binarization)?;
    let models = if cfg.weights.scheme == EdgeScheme::Prob {
        bin.slice_models()?
    } else {
        Vec::new()
    };
    let comps = connected_components(&bin.mask, Connectivity::Six);
    let n_components = comps.len();
    let ctx = SplitContext {
        intensity: &bin.smoothed,
        models: &models,
        weights: cfg.weights,
        partition: cfg.partition,
        params: cfg.nucleus_params(),
        metric: cut_metric_weights(v.spacing()),
    };
    let per_component: Vec<Vec<KeptComponent>> = comps
        .into_par_iter()
        .map(|c| segment_component(c, &ctx))
        .collect::<Result<_>>()?;

    let mut kept: Vec<KeptComponent> = per_component.into_iter().flatten().collect();
    kept.sort_by_key(|k| k.component.first().map(|v| v.scan_key()));
    let mut labels = v.like(0u32);
    let objects = kept
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            let id = i as u32 + 1;
            for &p in &k.component.voxels {
                labels.set(p, id);
            }
            ObjectRecord {
                id,
                voxel_count: k.component.len(),
                volume: k.volume,
                sphericity: k.sphericity,
                score: k.score,
            }
        })
        .collect();
    Ok(SegmentationResult {
        labels,
        objects,
        slabs: bin.slabs,
        components: n_components,
    })
}
