//! Subcommand arguments and their implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, ValueEnum};
use quadseg::threshopt::ThresholdEntry;
use quadseg::{
    build_quadtree, load_pgm, optimize_tree, save_pgm, segment, train_gda_with, Execution,
    Extraction, GdaModel, GdaOptions, GrayImage, KernelSpec, ObjectiveWeights, QuadTree,
    SimplexParams, SplitPolicy, ThresholdReport,
};
use serde::Serialize;

use crate::dataset::{read_dataset, read_table, write_features, LabelColumn};
use crate::error::CliError;
use crate::metrics::evaluate_masks;
use crate::phantom::{render_phantom, PhantomSpec};

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_image(path: &Path) -> Result<GrayImage, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(load_pgm(&bytes)?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------- phantom

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Phantom description (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output image (P5).
    #[arg(long)]
    pub image: PathBuf,
    /// Output ground-truth mask (P5, 0/255).
    #[arg(long)]
    pub truth: PathBuf,
}

pub fn cmd_phantom(args: &PhantomArgs) -> Result<(), CliError> {
    let spec = PhantomSpec::from_json(&read_text(&args.spec)?)?;
    let (img, mask) = render_phantom(&spec)?;
    write_bytes(&args.image, &save_pgm(&img))?;
    write_bytes(&args.truth, &save_pgm(&mask))
}

// ---------------------------------------------------------------- segment

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, default_value_t = SplitPolicy::default().max_depth)]
    pub max_depth: u32,
    #[arg(long, default_value_t = SplitPolicy::default().min_side)]
    pub min_side: usize,
    #[arg(long, default_value_t = SplitPolicy::default().var_threshold)]
    pub var_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    #[arg(long, default_value_t = ObjectiveWeights::default().w_var)]
    pub w_var: f64,
    #[arg(long, default_value_t = ObjectiveWeights::default().w_ent)]
    pub w_ent: f64,
    /// Scale the entropy weight by region complexity.
    #[arg(long, default_value_t = ObjectiveWeights::default().adaptive, action = ArgAction::Set)]
    pub adaptive: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimplexArgs {
    #[arg(long, default_value_t = SimplexParams::default().max_iter)]
    pub max_iter: usize,
    #[arg(long, default_value_t = SimplexParams::default().diameter_tol)]
    pub diameter_tol: f64,
    #[arg(long, default_value_t = SimplexParams::default().reflection)]
    pub reflection: f64,
    #[arg(long, default_value_t = SimplexParams::default().expansion)]
    pub expansion: f64,
    #[arg(long, default_value_t = SimplexParams::default().contraction)]
    pub contraction: f64,
    #[arg(long, default_value_t = SimplexParams::default().shrink)]
    pub shrink: f64,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Input image (PGM, P2 or P5).
    #[arg(long)]
    pub image: PathBuf,
    /// Output mask (P5, 0/255).
    #[arg(long)]
    pub mask: PathBuf,
    /// Report (JSON); printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub simplex: SimplexArgs,
    /// Add each leaf's gap to the exhaustive optimum.
    #[arg(long)]
    pub oracle: bool,
    /// Include wall time in the report (makes it run-dependent).
    #[arg(long)]
    pub timing: bool,
}

impl From<&PolicyArgs> for SplitPolicy {
    fn from(a: &PolicyArgs) -> Self {
        SplitPolicy {
            max_depth: a.max_depth,
            min_side: a.min_side,
            var_threshold: a.var_threshold,
        }
    }
}

impl From<&WeightArgs> for ObjectiveWeights {
    fn from(a: &WeightArgs) -> Self {
        ObjectiveWeights {
            w_var: a.w_var,
            w_ent: a.w_ent,
            adaptive: a.adaptive,
        }
    }
}

impl From<&SimplexArgs> for SimplexParams {
    fn from(a: &SimplexArgs) -> Self {
        SimplexParams {
            max_iter: a.max_iter,
            diameter_tol: a.diameter_tol,
            reflection: a.reflection,
            expansion: a.expansion,
            contraction: a.contraction,
            shrink: a.shrink,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentSettings {
    pub policy: SplitPolicy,
    pub weights: ObjectiveWeights,
    pub simplex: SimplexParams,
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub tree: QuadTree,
    pub report: ThresholdReport,
    pub mask: GrayImage,
}

/// The library pipeline, exactly as `segment` runs it.
pub fn segment_image(
    img: &GrayImage,
    settings: &SegmentSettings,
    oracle: bool,
    exec: Execution,
) -> Result<Segmentation, CliError> {
    let tree = build_quadtree(img, settings.policy)?;
    let mut report = optimize_tree(img, &tree, &settings.weights, &settings.simplex, exec)?;
    if oracle {
        report.attach_oracle(img, &tree, &settings.weights)?;
    }
    let mask = segment(img, &tree, &report)?;
    Ok(Segmentation { tree, report, mask })
}

#[derive(Serialize)]
struct SegmentReport<'a> {
    width: usize,
    height: usize,
    settings: &'a SegmentSettings,
    leaf_count: usize,
    threshold_min: u8,
    threshold_max: u8,
    leaves: &'a [ThresholdEntry],
    tree: &'a QuadTree,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

pub fn segment_report_json(
    seg: &Segmentation,
    settings: &SegmentSettings,
    wall_time_ms: Option<f64>,
) -> Result<String, CliError> {
    let t = seg.report.thresholds();
    to_json(&SegmentReport {
        width: seg.tree.width,
        height: seg.tree.height,
        settings,
        leaf_count: t.len(),
        threshold_min: t.iter().copied().min().unwrap_or(0),
        threshold_max: t.iter().copied().max().unwrap_or(0),
        leaves: &seg.report.entries,
        tree: &seg.tree,
        wall_time_ms,
    })
}

pub fn cmd_segment(args: &SegmentArgs, exec: Execution) -> Result<(), CliError> {
    let img = read_image(&args.image)?;
    let settings = SegmentSettings {
        policy: (&args.policy).into(),
        weights: (&args.weights).into(),
        simplex: (&args.simplex).into(),
    };
    let start = Instant::now();
    let seg = segment_image(&img, &settings, args.oracle, exec)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    write_bytes(&args.mask, &save_pgm(&seg.mask))?;
    let json = segment_report_json(&seg, &settings, args.timing.then_some(elapsed))?;
    emit(args.report.as_deref(), &json)
}

// ---------------------------------------------------------------- eval-seg

#[derive(Debug, Args)]
pub struct EvalSegArgs {
    /// Predicted mask (PGM, 0/255).
    #[arg(long)]
    pub mask: PathBuf,
    /// Ground-truth mask (PGM, 0/255).
    #[arg(long)]
    pub truth: PathBuf,
    /// Metrics (JSON); printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_eval_seg(args: &EvalSegArgs) -> Result<(), CliError> {
    let mask = read_image(&args.mask)?;
    let truth = read_image(&args.truth)?;
    let m = evaluate_masks(&mask, &truth)?;
    emit(args.out.as_deref(), &m.to_report())
}

// ---------------------------------------------------------------- gda-train

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Linear,
    Rbf,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractionArg {
    KOrthogonal,
    Generalized,
}

#[derive(Debug, Args)]
pub struct GdaTrainArgs {
    /// Training CSV: features then an integer label in 1..Z.
    #[arg(long)]
    pub data: PathBuf,
    /// First CSV line is a header.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value_t = KernelKind::Rbf)]
    pub kernel: KernelKind,
    /// RBF width; defaults to 1 / n.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub coef: f64,
    /// Number of discriminants; defaults to Z - 1.
    #[arg(long)]
    pub discriminants: Option<usize>,
    #[arg(long, value_enum, default_value_t = ExtractionArg::KOrthogonal)]
    pub extraction: ExtractionArg,
    /// Output model (JSON).
    #[arg(long)]
    pub model: PathBuf,
}

impl GdaTrainArgs {
    pub fn kernel_spec(&self, dim: usize) -> KernelSpec {
        match self.kernel {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => match self.gamma {
                Some(gamma) => KernelSpec::Rbf { gamma },
                None => KernelSpec::rbf_default(dim),
            },
            KernelKind::Polynomial => KernelSpec::Polynomial {
                degree: self.degree,
                coef: self.coef,
            },
        }
    }

    pub fn options(&self) -> GdaOptions {
        GdaOptions {
            discriminants: self.discriminants,
            extraction: match self.extraction {
                ExtractionArg::KOrthogonal => Extraction::KOrthogonal,
                ExtractionArg::Generalized => Extraction::Generalized,
            },
        }
    }
}

pub fn model_json(model: &GdaModel) -> Result<String, CliError> {
    to_json(model)
}

pub fn load_model(path: &Path) -> Result<GdaModel, CliError> {
    let model: GdaModel = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::InvalidModel(format!("{}: {e}", path.display())))?;
    model
        .validate()
        .map_err(|e| CliError::InvalidModel(e.to_string()))?;
    Ok(model)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    requested: usize,
    achieved: usize,
    rank_limited: bool,
    epsilon: f64,
    eigenvalues: &'a [f64],
}

pub fn cmd_gda_train(args: &GdaTrainArgs, exec: Execution) -> Result<(), CliError> {
    let data = read_dataset(&read_text(&args.data)?, args.header)?;
    let spec = args.kernel_spec(data.dim());
    let model = train_gda_with(&data, &spec, &args.options(), exec)?;
    write_bytes(&args.model, model_json(&model)?.as_bytes())?;
    print!(
        "{}",
        to_json(&TrainSummary {
            requested: model.requested,
            achieved: model.d(),
            rank_limited: model.rank_limited,
            epsilon: model.epsilon,
            eigenvalues: &model.eigenvalues,
        })?
    );
    Ok(())
}

// ---------------------------------------------------------------- gda-project

#[derive(Debug, Args)]
pub struct GdaProjectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Samples to project; a trailing label column is passed through.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Feature CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn project_csv(
    model: &GdaModel,
    text: &str,
    header: bool,
    exec: Execution,
) -> Result<String, CliError> {
    let table = read_table(
        text,
        header,
        LabelColumn::Optional {
            features: model.dim,
        },
    )?;
    let rows = model.project_batch(&table.features, exec)?;
    Ok(write_features(model.d(), &rows, table.labels.as_deref()))
}

pub fn cmd_gda_project(args: &GdaProjectArgs, exec: Execution) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let out = project_csv(&model, &read_text(&args.data)?, args.header, exec)?;
    emit(args.out.as_deref(), &out)
}

// ---------------------------------------------------------------- gda-eval

#[derive(Debug, Args)]
pub struct GdaEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled samples.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Report (JSON); printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdaEvaluation {
    pub samples: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `confusion[true - 1][predicted - 1]`
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate_model(
    model: &GdaModel,
    features: &[Vec<f64>],
    labels: &[usize],
    exec: Execution,
) -> Result<GdaEvaluation, CliError> {
    let z = model.num_classes;
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > z) {
        return Err(
            quadseg::GdaError::InvalidDataset(format!("label {bad} outside 1..={z}")).into(),
        );
    }
    let proj = model.project_batch(features, exec)?;
    let mut confusion = vec![vec![0usize; z]; z];
    let mut correct = 0;
    for (p, &l) in proj.iter().zip(labels) {
        let c = model.nearest_class(p);
        confusion[l - 1][c - 1] += 1;
        correct += (c == l) as usize;
    }
    let n = labels.len();
    Ok(GdaEvaluation {
        samples: n,
        correct,
        accuracy: if n == 0 {
            0.0
        } else {
            correct as f64 / n as f64
        },
        confusion,
    })
}

pub fn cmd_gda_eval(args: &GdaEvalArgs, exec: Execution) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let table = read_table(
        &read_text(&args.data)?,
        args.header,
        LabelColumn::Optional {
            features: model.dim,
        },
    )?;
    let Some(labels) = table.labels else {
        return Err(CliError::CsvParse("evaluation needs a label column".into()));
    };
    let ev = evaluate_model(&model, &table.features, &labels, exec)?;
    emit(args.out.as_deref(), &to_json(&ev)?)
}
