//! `ebcle` command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arch::{
    build_densenet_with, build_resnet_v1, build_resnext, ArchGraph, DenseNetOptions, InputShape,
    DEFAULT_CARDINALITY, PLANNED_DENSE_BLOCKS,
};
use crate::dataset::{
    load_cifar_binary, load_mnist_idx, load_pnm_dir, synth_dataset, CifarLabels, ClassSpec,
    ImageDataset, KnownDataset, Split, SynthSpec,
};
use crate::entropy::{
    class_spread, dataset_entropy, ChannelMode, EntropyReport, DEFAULT_CV_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::planner::{
    default_breadth, ebcle, plan_depth, ArchPlan, DatasetKind, EbcleEstimate, Family,
};
use crate::report::{compare, format_hms, load_runs, significance, Significance};
use crate::trainer::{train, AdamConfig, RunRecord, TrainConfig};
use crate::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(
    name = "ebcle",
    version,
    about = "Dataset entropy analysis and entropy-bounded CNN planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shannon entropy of a dataset's images.
    Entropy(EntropyArgs),
    /// Block counts, depths, breadths and parameter counts from an entropy.
    Plan(PlanArgs),
    /// Layer-by-layer trainable parameter count of one architecture.
    Params(ParamsArgs),
    /// Train a residual network and write a run record.
    Train(TrainArgs),
    /// Paired one-tailed t-test over two sets of run records.
    Ttest(TtestArgs),
    /// Timing and significance comparison of baseline and variant runs.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Synth {
    /// Every pixel 128: zero entropy.
    Uniform,
    /// Two levels with equal odds: ln 2 per image, in expectation.
    Binary,
    /// All 256 levels with equal odds.
    Noise,
    /// Two classes, dark versus bright.
    Contrast,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// MNIST IDX image and label files.
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"])]
    pub mnist: Option<Vec<PathBuf>>,
    /// CIFAR binary batch files, concatenated in order.
    #[arg(long, num_args = 1..)]
    pub cifar: Option<Vec<PathBuf>>,
    /// Label bytes per CIFAR record: 1 (CIFAR-10) or 2 (CIFAR-100).
    #[arg(long, default_value_t = 1)]
    pub cifar_label_bytes: usize,
    /// Directory of class subdirectories holding PGM/PPM files.
    #[arg(long)]
    pub pnm: Option<PathBuf>,
    /// Named dataset looked up under --data-dir.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, env = "EBCLE_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Built-in synthetic dataset.
    #[arg(long, value_enum)]
    pub synth: Option<Synth>,
    /// Synthetic dataset described by a JSON file.
    #[arg(long)]
    pub synth_spec: Option<PathBuf>,
    /// Images per class for synthetic data.
    #[arg(long, default_value_t = 100)]
    pub synth_count: usize,
    #[arg(long, default_value_t = 0)]
    pub synth_seed: u64,
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => Err(Error::Usage(format!(
            "unknown split {other:?} (train | test)"
        ))),
    }
}

/// Built-in synthetic specs, 28×28 grayscale.
pub fn synth_preset(kind: Synth) -> SynthSpec {
    let classes = match kind {
        Synth::Uniform => vec![ClassSpec::uniform_value(128)],
        Synth::Binary => vec![ClassSpec {
            distribution: BTreeMap::from([(0, 0.5), (255, 0.5)]),
        }],
        Synth::Noise => vec![ClassSpec {
            distribution: (0..=255u8).map(|v| (v, 1.0 / 256.0)).collect(),
        }],
        Synth::Contrast => vec![
            ClassSpec {
                distribution: BTreeMap::from([(20, 0.9), (200, 0.1)]),
            },
            ClassSpec {
                distribution: BTreeMap::from([(20, 0.1), (200, 0.9)]),
            },
        ],
    };
    SynthSpec {
        height: 28,
        width: 28,
        channels: 1,
        classes,
    }
}

impl DataArgs {
    fn sources(&self) -> usize {
        [
            self.mnist.is_some(),
            self.cifar.is_some(),
            self.pnm.is_some(),
            self.dataset.is_some(),
            self.synth.is_some(),
            self.synth_spec.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }

    pub fn is_given(&self) -> bool {
        self.sources() > 0
    }

    /// Loads the selected dataset; `split` overrides `--split` for named ones.
    pub fn load_split(&self, split: Option<Split>) -> Result<ImageDataset> {
        match self.sources() {
            0 => return Err(Error::Usage("no dataset given".into())),
            1 => {}
            _ => return Err(Error::Usage("give exactly one dataset source".into())),
        }
        let split = match split {
            Some(s) => s,
            None => parse_split(&self.split)?,
        };
        if let Some(paths) = &self.mnist {
            return load_mnist_idx(&paths[0], &paths[1]);
        }
        if let Some(paths) = &self.cifar {
            return load_cifar_binary(paths, CifarLabels::from_width(self.cifar_label_bytes)?);
        }
        if let Some(dir) = &self.pnm {
            return load_pnm_dir(dir);
        }
        if let Some(name) = &self.dataset {
            let kind: KnownDataset = name.parse()?;
            let root = self.data_dir.as_deref().ok_or_else(|| {
                Error::Usage("--dataset needs --data-dir or EBCLE_DATA_DIR".into())
            })?;
            return kind.load(root, split);
        }
        let seed = match split {
            Split::Train => self.synth_seed,
            Split::Test => self.synth_seed.wrapping_add(1),
        };
        let spec = match (&self.synth, &self.synth_spec) {
            (Some(kind), _) => synth_preset(*kind),
            (_, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?
            }
            _ => unreachable!("one source is set"),
        };
        let mut ds = synth_dataset(&spec, self.synth_count, seed)?;
        ds.split = split;
        Ok(ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// JSON output.
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// CSV output.
    #[arg(long)]
    pub csv: bool,
}

impl OutputArgs {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Markdown
        }
    }
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "flatten-all")]
    pub mode: ChannelMode,
    #[arg(long, default_value_t = DEFAULT_CV_THRESHOLD)]
    pub cv_threshold: f64,
    /// Print the full report as JSON.
    #[arg(long, conflicts_with = "table")]
    pub json: bool,
    /// Print a summary table (default).
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArchChoice {
    All,
    Resnet,
    Densenet,
    Resnext,
}

impl ArchChoice {
    fn families(self) -> Vec<Family> {
        match self {
            ArchChoice::All => Family::ALL.to_vec(),
            ArchChoice::Resnet => vec![Family::ResNet],
            ArchChoice::Densenet => vec![Family::DenseNet],
            ArchChoice::Resnext => vec![Family::ResNeXt],
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Dataset entropy in nats; otherwise computed from the dataset.
    #[arg(long, allow_hyphen_values = true)]
    pub entropy: Option<f64>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub arch: ArchChoice,
    /// Override the default breadth for every family.
    #[arg(long)]
    pub breadth: Option<u32>,
    /// Use the lower bound ⌊ΔE⌋ instead of ⌈ΔE⌉.
    #[arg(long)]
    pub lower: bool,
    /// Input shape HxWxC; inferred from the dataset when one is given.
    #[arg(long)]
    pub input: Option<InputShape>,
    #[arg(long)]
    pub classes: Option<u32>,
    /// Breadth preset; inferred from the input shape when absent.
    #[arg(long)]
    pub kind: Option<DatasetKind>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[arg(long)]
    pub arch: Family,
    #[arg(long)]
    pub depth: u32,
    /// ResNet width, DenseNet growth rate or ResNeXt per-path width.
    #[arg(long)]
    pub width: u32,
    #[arg(long, default_value = "32x32x3")]
    pub input: InputShape,
    #[arg(long, default_value_t = 10)]
    pub classes: u32,
    #[arg(long, default_value_t = DEFAULT_CARDINALITY)]
    pub cardinality: u32,
    #[arg(long, default_value_t = 3)]
    pub dense_blocks: u32,
    /// Print the layer graph as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "resnet")]
    pub arch: Family,
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
    #[arg(long, default_value_t = 16)]
    pub width: u32,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Standardise inputs with the fitting split's pixel statistics.
    #[arg(long)]
    pub standardize: bool,
    /// Use only the first N training images.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Use only the first N test images.
    #[arg(long)]
    pub test_subset: Option<usize>,
    /// Training data.
    #[command(flatten)]
    pub data: DataArgs,
    /// MNIST IDX test image and label files (with --mnist).
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"])]
    pub mnist_test: Option<Vec<PathBuf>>,
    /// CIFAR test batch files (with --cifar).
    #[arg(long, num_args = 1..)]
    pub cifar_test: Option<Vec<PathBuf>>,
    /// Write the run record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    /// Run records of the shallow (EBCLE) model.
    #[arg(long)]
    pub ebcle: PathBuf,
    /// Run records of the deeper baseline.
    #[arg(long)]
    pub baseline: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run records of the deeper baseline
    pub baseline: PathBuf,
    /// Run records of the shallow variant
    pub variant: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Format(format!("serialising output: {e}")))
}

fn entropy_text(rep: &EntropyReport, cv_threshold: f64) -> String {
    let spread = class_spread(rep, cv_threshold);
    let mut out = String::new();
    let _ = writeln!(out, "dataset  {}", rep.dataset);
    let _ = writeln!(out, "images   {}", rep.per_image.len());
    let _ = writeln!(out, "mode     {}", rep.mode);
    let _ = writeln!(
        out,
        "mean {:.2} nats ({:.6})",
        rep.mean_rounded, rep.mean_nats
    );
    let _ = writeln!(out, "std  {:.6} nats", rep.std_nats);
    let _ = writeln!(out, "\n| Class | Mean entropy (nats) |\n|---|---|");
    for (class, mean) in &rep.per_class_mean {
        let _ = writeln!(out, "| {class} | {mean:.4} |");
    }
    let _ = writeln!(out, "\nclass spread: cv {:.4}", spread.cv);
    if spread.warn {
        let _ = writeln!(
            out,
            "warning: per-class entropies vary by more than {:.0}%; a single estimate may fit some classes poorly",
            cv_threshold * 100.0
        );
    }
    out
}

fn cmd_entropy(a: &EntropyArgs) -> Result<String> {
    let ds = a.data.load_split(None)?;
    let rep = dataset_entropy(&ds, a.mode)?;
    if a.json {
        to_json(&rep)
    } else {
        Ok(entropy_text(&rep, a.cv_threshold))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub plan: ArchPlan,
    pub params: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub schema_version: u32,
    pub estimate: EbcleEstimate,
    pub used_upper_bound: bool,
    pub input: InputShape,
    pub classes: u32,
    pub kind: DatasetKind,
    pub rows: Vec<PlanRow>,
}

fn infer_kind(input: InputShape) -> DatasetKind {
    if input.channels == 1 {
        DatasetKind::Simple
    } else if input.height <= 32 && input.width <= 32 {
        DatasetKind::Natural32
    } else {
        DatasetKind::NaturalLarge
    }
}

/// Graph of a planned configuration, built with the default layouts.
pub fn plan_graph(plan: &ArchPlan, input: InputShape, classes: u32) -> Result<ArchGraph> {
    let breadth = plan
        .breadth
        .ok_or_else(|| Error::Config("plan has no breadth".into()))?;
    match plan.family {
        Family::ResNet => build_resnet_v1(plan.depth, breadth, input, classes),
        Family::DenseNet => build_densenet_with(
            plan.depth,
            breadth,
            input,
            classes,
            DenseNetOptions {
                dense_blocks: PLANNED_DENSE_BLOCKS,
                ..DenseNetOptions::default()
            },
        ),
        Family::ResNeXt => build_resnext(plan.depth, breadth, DEFAULT_CARDINALITY, input, classes),
    }
}

pub fn build_plan_report(
    estimate: EbcleEstimate,
    families: &[Family],
    use_upper: bool,
    breadth: Option<u32>,
    input: InputShape,
    classes: u32,
    kind: DatasetKind,
) -> Result<PlanReport> {
    let mut rows = Vec::with_capacity(families.len());
    for &family in families {
        let plan = plan_depth(family, &estimate, use_upper)
            .with_breadth(breadth.unwrap_or_else(|| default_breadth(family, kind)));
        let params = plan_graph(&plan, input, classes)?.total_params;
        rows.push(PlanRow { plan, params });
    }
    Ok(PlanReport {
        schema_version: SCHEMA_VERSION,
        estimate,
        used_upper_bound: use_upper,
        input,
        classes,
        kind,
        rows,
    })
}

fn plan_text(rep: &PlanReport) -> String {
    let e = &rep.estimate;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "entropy {:.4} nats, ΔE {:.4}, N upper {}, N lower {} (using {})\n",
        e.entropy_nats,
        e.delta_e,
        e.n_upper,
        e.n_lower,
        if rep.used_upper_bound {
            "upper"
        } else {
            "lower"
        }
    );
    let _ = writeln!(
        out,
        "| Model | N | H′ | χ′ | Params | At depth floor |\n|---|---|---|---|---|---|"
    );
    for r in &rep.rows {
        let p = &r.plan;
        let _ = writeln!(
            out,
            "| {}-EBCLE | {} | {} | {} | {} | {} |",
            p.family,
            p.n_blocks,
            p.depth,
            p.breadth.unwrap_or(0),
            r.params,
            if p.at_lower_bound { "yes" } else { "no" }
        );
    }
    out
}

fn cmd_plan(a: &PlanArgs) -> Result<String> {
    let (entropy, ds_shape) = match (a.entropy, a.data.is_given()) {
        (Some(_), true) => {
            return Err(Error::Usage("give --entropy or a dataset, not both".into()))
        }
        (Some(e), false) => (e, None),
        (None, true) => {
            let ds = a.data.load_split(None)?;
            let rep = dataset_entropy(&ds, ChannelMode::default())?;
            let (h, w, c) = ds.shape().expect("non-empty after entropy");
            (
                rep.mean_nats,
                Some((
                    InputShape::new(h as u32, w as u32, c as u32),
                    ds.num_classes as u32,
                )),
            )
        }
        (None, false) => return Err(Error::Usage("give --entropy or a dataset".into())),
    };
    let estimate = ebcle(entropy).map_err(|e| match e {
        Error::Domain(m) => Error::Usage(m),
        other => other,
    })?;
    let input = a
        .input
        .or(ds_shape.map(|s| s.0))
        .unwrap_or(InputShape::new(32, 32, 3));
    let classes = a.classes.or(ds_shape.map(|s| s.1)).unwrap_or(10);
    let kind = a.kind.unwrap_or_else(|| infer_kind(input));
    let rep = build_plan_report(
        estimate,
        &a.arch.families(),
        !a.lower,
        a.breadth,
        input,
        classes,
        kind,
    )?;
    if a.json {
        to_json(&rep)
    } else {
        Ok(plan_text(&rep))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub schema_version: u32,
    pub graph: ArchGraph,
}

pub fn params_graph(a: &ParamsArgs) -> Result<ArchGraph> {
    match a.arch {
        Family::ResNet => build_resnet_v1(a.depth, a.width, a.input, a.classes),
        Family::DenseNet => build_densenet_with(
            a.depth,
            a.width,
            a.input,
            a.classes,
            DenseNetOptions {
                dense_blocks: a.dense_blocks,
                ..DenseNetOptions::default()
            },
        ),
        Family::ResNeXt => build_resnext(a.depth, a.width, a.cardinality, a.input, a.classes),
    }
}

fn params_text(g: &ArchGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}-{} breadth {} input {} classes {}\n",
        g.family, g.depth, g.breadth, g.input, g.classes
    );
    let _ = writeln!(
        out,
        "| # | Layer | Kernel | In | Out | Stride | Groups | Bias | Skip | Params |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|---|");
    for (i, l) in g.layers.iter().enumerate() {
        let _ = writeln!(
            out,
            "| {i} | {:?} | {}x{} | {} | {} | {} | {} | {} | {} | {} |",
            l.kind,
            l.kernel.0,
            l.kernel.1,
            l.in_ch,
            l.out_ch,
            l.stride,
            l.groups,
            if l.has_bias { "yes" } else { "no" },
            if l.on_skip { "yes" } else { "no" },
            l.params()
        );
    }
    let _ = writeln!(out, "\ncounted depth {}", g.counted_depth());
    let _ = writeln!(out, "total trainable parameters {}", g.total_params);
    out
}

fn cmd_params(a: &ParamsArgs) -> Result<String> {
    let graph = params_graph(a)?;
    if a.json {
        to_json(&ParamsReport {
            schema_version: SCHEMA_VERSION,
            graph,
        })
    } else {
        Ok(params_text(&graph))
    }
}

fn test_split(a: &TrainArgs) -> Result<ImageDataset> {
    if let Some(p) = &a.mnist_test {
        return load_mnist_idx(&p[0], &p[1]);
    }
    if let Some(p) = &a.cifar_test {
        return load_cifar_binary(p, CifarLabels::from_width(a.data.cifar_label_bytes)?);
    }
    if a.data.mnist.is_some() || a.data.cifar.is_some() || a.data.pnm.is_some() {
        return Err(Error::Usage(
            "file-based training data needs --mnist-test or --cifar-test".into(),
        ));
    }
    a.data.load_split(Some(Split::Test))
}

pub fn run_train(a: &TrainArgs) -> Result<RunRecord> {
    let family = a.arch;
    let n = family
        .blocks_for(a.depth)
        .ok_or_else(|| Error::Usage(format!("depth {} does not fit {family}", a.depth)))?;
    let plan = ArchPlan::for_blocks(family, n).with_breadth(a.width);
    if plan.depth != a.depth {
        return Err(Error::Usage(format!(
            "depth {} is below the {family} floor of {}",
            a.depth, plan.depth_lower_bound
        )));
    }
    let mut train_ds = a.data.load_split(Some(Split::Train))?;
    let mut test_ds = test_split(a)?;
    if let Some(n) = a.subset {
        train_ds = train_ds.take(n);
    }
    if let Some(n) = a.test_subset {
        test_ds = test_ds.take(n);
    }
    let cfg = TrainConfig {
        optimizer: AdamConfig {
            learning_rate: a.lr,
            ..AdamConfig::default()
        },
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        train_fraction: a.train_fraction,
        standardize: a.standardize,
    };
    train(&plan, &train_ds, &test_ds, &cfg)
}

fn cmd_train(a: &TrainArgs) -> Result<String> {
    let rec = run_train(a)?;
    let json = to_json(&rec)?;
    match &a.out {
        Some(path) => {
            fs::write(path, &json).map_err(|e| Error::io(path, e))?;
            Ok(format!(
                "{}-{} width {}: test accuracy {:.2}%, time {}, {} params -> {}\n",
                rec.model.family,
                rec.model.depth,
                rec.model.width,
                rec.final_test_accuracy,
                format_hms(rec.wall_time_ms),
                rec.param_count,
                path.display()
            ))
        }
        None => Ok(json),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtestReport {
    pub schema_version: u32,
    pub significance: Significance,
}

fn accuracies(path: &Path) -> Result<Vec<f64>> {
    Ok(load_runs(path)?
        .iter()
        .map(|r| r.final_test_accuracy)
        .collect())
}

fn cmd_ttest(a: &TtestArgs) -> Result<String> {
    let sig = significance(&accuracies(&a.ebcle)?, &accuracies(&a.baseline)?);
    Ok(match a.output.format() {
        Format::Json => to_json(&TtestReport {
            schema_version: SCHEMA_VERSION,
            significance: sig,
        })?,
        Format::Csv => sig.to_csv(),
        Format::Markdown => sig.to_markdown(),
    })
}

fn cmd_compare(a: &CompareArgs) -> Result<String> {
    let rep = compare(&load_runs(&a.baseline)?, &load_runs(&a.variant)?)?;
    Ok(match a.output.format() {
        Format::Json => to_json(&rep)?,
        Format::Csv => rep.to_csv(),
        Format::Markdown => rep.to_markdown(),
    })
}

/// Runs one parsed command and returns what it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Entropy(a) => cmd_entropy(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Params(a) => cmd_params(a),
        Command::Train(a) => cmd_train(a),
        Command::Ttest(a) => cmd_ttest(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => match stdout.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(stderr, "error: writing output: {e}");
                2
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
