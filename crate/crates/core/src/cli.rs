//! Command-line front end.
//!
//! Every subcommand reads a JSON config, applies flag overrides on top of it
//! and writes its outputs plus a report that embeds the resolved config.
//! [`run`] returns the process exit code: 0 on success, 1 for usage and
//! configuration errors, 2 for failures caused by the data.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::binarize::{binarize, BinarizationConfig, ThresholdMethod};
use crate::error::{Error, Result};
use crate::evaluate::evaluate;
use crate::graphbuild::EdgeScheme;
use crate::splitter::{segment, PipelineConfig, SegmentationResult};
use crate::synthgen::{generate, SceneConfig};
use crate::voxel::rvol::{self, AnyVolume};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nucseg", version, about = "Segment cell nuclei in 3D volumes")]
pub struct Cli {
    /// Worker threads; 1 runs sequentially. Defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: <P>_intensity, <P>_truth and <P>_nuclei.json.
    Synth(SynthArgs),
    /// Binarize a volume into a u8 mask and report the slab thresholds.
    Binarize(BinarizeArgs),
    /// Segment a volume into a u32 label volume and a JSON-lines object report.
    Segment(SegmentArgs),
    /// Count added, missed, merged and split objects against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub nucleus_count: Option<usize>,
    #[arg(long)]
    pub clustering: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

/// Overrides shared by `binarize` and `segment`.
#[derive(Debug, Args)]
pub struct BinarizeFlags {
    #[arg(long, value_parser = parse_method)]
    pub method: Option<ThresholdMethod>,
    #[arg(long)]
    pub sigma_s: Option<f64>,
    /// Number of slab groups along z.
    #[arg(long, short = 'm')]
    pub slabs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BinarizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// A binarization config, or a pipeline config whose `binarization` section is used.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Slab report path; defaults to `<out>_slabs.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub flags: BinarizeFlags,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Partitioner seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub flags: BinarizeFlags,
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<EdgeScheme>,
    #[arg(long)]
    pub sigma_grad: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub v_min: Option<f64>,
    #[arg(long)]
    pub v_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<ThresholdMethod, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown method `{s}` (otsu, model_threshold)"))
}

fn parse_scheme(s: &str) -> std::result::Result<EdgeScheme, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown scheme `{s}` (grad, prob, const)"))
}

/// Failure of one subcommand, already classified by exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_usage() { EXIT_USAGE } else { EXIT_DATA },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("invalid `threads`: must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => synth(a),
        Command::Binarize(a) => binarize_cmd(a),
        Command::Segment(a) => segment_cmd(a),
        Command::Eval(a) => eval_cmd(a),
    })
}

/// Reads a config file. Unreadable or malformed configs are usage errors.
fn read_config(path: &Path) -> std::result::Result<serde_json::Value, Failure> {
    let text = fs::read(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_slice(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(v: serde_json::Value, path: &Path) -> std::result::Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> std::result::Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

/// `<prefix><suffix>` without treating the prefix as a directory.
fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn synth(a: SynthArgs) -> std::result::Result<(), Failure> {
    let mut cfg: SceneConfig = from_value(read_config(&a.config)?, &a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.nucleus_count {
        cfg.nucleus_count = n;
    }
    if let Some(c) = a.clustering {
        cfg.clustering = c;
    }
    if let Some(s) = a.noise_sigma {
        cfg.noise_sigma = s;
    }
    let scene = generate(&cfg)?;
    rvol::write(suffixed(&a.out_prefix, "_intensity"), &scene.intensity)?;
    rvol::write(suffixed(&a.out_prefix, "_truth"), &scene.truth)?;
    write_json(
        &suffixed(&a.out_prefix, "_nuclei.json"),
        &json!({ "config": cfg, "seed": cfg.seed, "nuclei": scene.nuclei }),
    )?;
    println!("{} nuclei written with prefix {}", scene.nuclei.len(), a.out_prefix.display());
    Ok(())
}

fn apply_binarize_flags(cfg: &mut BinarizationConfig, f: &BinarizeFlags) {
    if let Some(m) = f.method {
        cfg.method = m;
    }
    if let Some(s) = f.sigma_s {
        cfg.sigma_s = s;
    }
    if let Some(m) = f.slabs {
        cfg.slabs = m;
    }
}

fn binarize_cmd(a: BinarizeArgs) -> std::result::Result<(), Failure> {
    let mut value = read_config(&a.config)?;
    if let Some(section) = value.get_mut("binarization") {
        value = section.take();
    }
    let mut cfg: BinarizationConfig = from_value(value, &a.config)?;
    apply_binarize_flags(&mut cfg, &a.flags);
    let input = rvol::read(&a.input)?;
    let b = match &input {
        AnyVolume::U8(v) => binarize(v, &cfg),
        AnyVolume::U16(v) => binarize(v, &cfg),
        AnyVolume::U32(v) => binarize(v, &cfg),
        AnyVolume::F32(v) => binarize(v, &cfg),
    }?;
    rvol::write(&a.out, &b.mask)?;
    let report_path = a.report.unwrap_or_else(|| suffixed(&rvol::paths(&a.out).0.with_extension(""), "_slabs.json"));
    let foreground: usize = b.slabs.iter().map(|s| s.foreground_voxels).sum();
    write_json(
        &report_path,
        &json!({ "config": cfg, "foreground_voxels": foreground, "slabs": b.slabs }),
    )?;
    println!("{foreground} foreground voxels in {} slab(s)", b.slabs.len());
    Ok(())
}

/// Pipeline config from the file plus command-line overrides.
pub fn resolve_pipeline(a: &SegmentArgs) -> std::result::Result<PipelineConfig, Failure> {
    let mut cfg: PipelineConfig = from_value(read_config(&a.config)?, &a.config)?;
    apply_binarize_flags(&mut cfg.binarization, &a.flags);
    if let Some(s) = a.seed {
        cfg.partition.seed = s;
    }
    if let Some(s) = a.scheme {
        cfg.weights.scheme = s;
    }
    if let Some(s) = a.sigma_grad {
        cfg.weights.sigma_grad = s;
    }
    if let Some(e) = a.epsilon {
        cfg.partition.epsilon = e;
    }
    if let Some(v) = a.v_min {
        cfg.model.v_min = v;
    }
    if let Some(v) = a.v_max {
        cfg.model.v_max = v;
    }
    Ok(cfg)
}

/// The report: one header line with the resolved config and seed, then one
/// line per object.
pub fn segmentation_report(cfg: &PipelineConfig, r: &SegmentationResult) -> Result<String> {
    let header = json!({
        "config": cfg,
        "seed": cfg.partition.seed,
        "components": r.components,
        "objects": r.objects.len(),
        "thresholds": r.slabs.iter().map(|s| s.threshold).collect::<Vec<_>>(),
    });
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for o in &r.objects {
        out.push_str(&serde_json::to_string(o)?);
        out.push('\n');
    }
    Ok(out)
}

fn segment_cmd(a: SegmentArgs) -> std::result::Result<(), Failure> {
    let cfg = resolve_pipeline(&a)?;
    let input = rvol::read(&a.input)?;
    cfg.validate(input.size()[2])?;
    let r = match &input {
        AnyVolume::U8(v) => segment(v, &cfg),
        AnyVolume::U16(v) => segment(v, &cfg),
        AnyVolume::U32(v) => segment(v, &cfg),
        AnyVolume::F32(v) => segment(v, &cfg),
    }?;
    rvol::write(&a.out, &r.labels)?;
    let report = segmentation_report(&cfg, &r)?;
    let mut f = fs::File::create(&a.report).map_err(|e| Error::io(&a.report, e))?;
    f.write_all(report.as_bytes()).map_err(|e| Error::io(&a.report, e))?;
    println!("{} components, {} objects", r.components, r.objects.len());
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> std::result::Result<(), Failure> {
    let pred = rvol::read(&a.pred)?.into_labels()?;
    let truth = rvol::read(&a.truth)?.into_labels()?;
    let r = evaluate(&pred, &truth)?;
    write_json(&a.out, &r)?;
    print!("{r}");
    Ok(())
}
