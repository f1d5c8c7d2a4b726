//! The six subcommands, their flags, and the exit-code policy: rejected
//! flags or configuration exit 2, failures while executing a validated
//! command exit 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use east_core::data::{self, DataError, Dataset, SplitSpec, SynthConfig};
use east_core::losses::{LossError, SystemVariant};
use east_core::measures::MeasureKind;
use east_core::metrics::MetricsReport;
use east_core::models::{
    complexity_report, throughput_bench, Checkpoint, ComplexityRow, ModelError, StageSpec,
    StudentNet, TeacherLr,
};
use east_core::trainer::{self, SplitDatasets, SystemConfig, TrainError, DEFAULT_LAMBDA_GRID};

use crate::manifest::{manifest_path, RunManifest};

/// Default student: two stages, halving then keeping the frame rate.
const DEFAULT_ARCH: &str = "16x2,12x1";

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Rejected flags or configuration; exits 2.
    Usage(String),
    /// Failure while executing a validated command; exits 1.
    Runtime(String),
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match &e {
            TrainError::InvalidConfig { .. }
            | TrainError::Loss(LossError::MissingComponent { .. }) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match &e {
            DataError::InvalidConfig { .. } | DataError::EmptySplit { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Shared flags

/// Hyperparameters common to every training-backed command.
#[derive(clap::Args, Debug)]
pub struct HyperArgs {
    /// Distillation mix weight α in [0, 1].
    #[arg(long, default_value_t = SystemConfig::default().alpha)]
    pub alpha: f64,
    /// Distillation softening temperature.
    #[arg(long, default_value_t = SystemConfig::default().temperature)]
    pub temperature: f64,
    /// Feature measure: dcor or cos-diff (EAsT variants pin their own).
    #[arg(long, default_value = "dcor")]
    pub measure: String,
    /// Maximum training epochs.
    #[arg(long, default_value_t = SystemConfig::default().epochs)]
    pub epochs: usize,
    /// Mini-batch size.
    #[arg(long, default_value_t = SystemConfig::default().batch_size)]
    pub batch_size: usize,
    /// SGD learning rate.
    #[arg(long, default_value_t = SystemConfig::default().lr)]
    pub lr: f64,
    /// Epochs without validation-mAP improvement before stopping.
    #[arg(long, default_value_t = SystemConfig::default().patience)]
    pub patience: usize,
    /// Run seed (initialization and batch shuffling).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl HyperArgs {
    fn system_config(&self, variant: SystemVariant, lambda: f64) -> Result<SystemConfig, CliError> {
        let measure = MeasureKind::parse(&self.measure).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown measure '{}'; expected dcor or cos-diff",
                self.measure
            ))
        })?;
        Ok(SystemConfig {
            variant,
            lambda,
            alpha: self.alpha,
            temperature: self.temperature,
            measure,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            patience: self.patience,
            seed: self.seed,
        })
    }

    fn config_json(&self) -> serde_json::Value {
        json!({
            "alpha": self.alpha,
            "temperature": self.temperature,
            "measure": self.measure,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "patience": self.patience,
            "seed": self.seed,
        })
    }
}

/// Dataset partitioning flags.
#[derive(clap::Args, Debug)]
pub struct SplitArgs {
    /// Train,val,test fractions.
    #[arg(long, default_value = "0.7,0.15,0.15")]
    pub split: String,
    /// Seed of the split shuffle, independent of the run seed.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

impl SplitArgs {
    fn spec(&self) -> Result<SplitSpec, CliError> {
        let parts = parse_f64_list(&self.split, "split fraction")?;
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "--split needs train,val,test fractions, e.g. 0.7,0.15,0.15; got '{}'",
                self.split
            )));
        }
        Ok(SplitSpec {
            train_frac: parts[0],
            val_frac: parts[1],
            test_frac: parts[2],
            limit_fraction: 1.0,
            seed: self.split_seed,
        })
    }
}

// ---------------------------------------------------------------------------
// Parsing helpers

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad {what} '{part}': expected a number")))
        })
        .collect()
}

/// Parse "16x2,12x1" into per-stage (out_channels, temporal_pool) pairs.
fn parse_arch(spec: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let bad = |part: &str, why: &str| {
        CliError::Usage(format!(
            "bad stage '{part}' in --arch '{spec}': {why} (stages are OUTxPOOL pairs, e.g. {DEFAULT_ARCH})"
        ))
    };
    spec.split(',')
        .map(|part| {
            let part = part.trim();
            let (out, pool) = part
                .split_once(['x', 'X'])
                .ok_or_else(|| bad(part, "missing the x separator"))?;
            let out: usize = out
                .trim()
                .parse()
                .map_err(|_| bad(part, "output channels must be a positive integer"))?;
            let pool: usize = pool
                .trim()
                .parse()
                .map_err(|_| bad(part, "temporal pool must be a positive integer"))?;
            if out == 0 || pool == 0 {
                return Err(bad(part, "channels and pool must be at least 1"));
            }
            Ok((out, pool))
        })
        .collect()
}

/// Chain parsed stages into specs, starting from the input channel count.
fn stage_specs(input_channels: usize, arch: &[(usize, usize)]) -> Vec<StageSpec> {
    let mut specs = Vec::with_capacity(arch.len());
    let mut in_channels = input_channels;
    for &(out_channels, pool) in arch {
        specs.push(StageSpec::new(in_channels, out_channels, pool));
        in_channels = out_channels;
    }
    specs
}

fn parse_system(s: &str) -> Result<SystemVariant, CliError> {
    SystemVariant::parse(s).ok_or_else(|| {
        let names: Vec<&str> = SystemVariant::ALL.iter().map(|v| v.name()).collect();
        CliError::Usage(format!(
            "unknown system '{s}'; expected one of: {}",
            names.join(", ")
        ))
    })
}

/// Seeds for a multi-seed command: `count` seeds counting up from `base`.
fn seed_range(base: u64, count: u64) -> Vec<u64> {
    (0..count).map(|i| base.saturating_add(i)).collect()
}

/// Embedding tag defaulting to the dataset's file stem.
fn dataset_tag(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

// ---------------------------------------------------------------------------
// I/O helpers

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    data::read_container(path).map_err(|e| match e {
        DataError::Io(io) => CliError::Runtime(format!("reading {}: {io}", path.display())),
        other => other.into(),
    })
}

fn split_dataset(ds: &Dataset, args: &SplitArgs) -> Result<SplitDatasets, CliError> {
    let spec = args.spec()?;
    let (train, val, test) = data::split(ds, &spec)?;
    Ok(SplitDatasets { train, val, test })
}

/// Load the teacher checkpoint when given; reject distillation systems
/// without one, and student checkpoints posing as teachers.
fn load_teacher(
    path: Option<&Path>,
    variant: SystemVariant,
) -> Result<Option<TeacherLr>, CliError> {
    let Some(path) = path else {
        if variant.uses_kd() {
            return Err(CliError::Usage(format!(
                "system '{variant}' distills from a trained teacher: pass --teacher <checkpoint> \
                 (write one with `east train --system teacher-lr`)"
            )));
        }
        return Ok(None);
    };
    let checkpoint = Checkpoint::load(path)
        .map_err(|e| CliError::Runtime(format!("reading teacher checkpoint {}: {e}", path.display())))?;
    match checkpoint {
        Checkpoint::Teacher(t) => Ok(Some(t)),
        Checkpoint::Student(_) => Err(CliError::Usage(format!(
            "{} holds a student checkpoint; --teacher needs one written by \
             `east train --system teacher-lr`",
            path.display()
        ))),
    }
}

/// One results-table row: system, embedding tag, and test metrics.
fn metrics_table(system: SystemVariant, tag: &str, report: &MetricsReport) -> String {
    format!(
        "system\tembedding\tmap\tmacro_f1\troc_auc\n{system}\t{tag}\t{:.4}\t{:.4}\t{:.4}\n",
        report.map, report.macro_f1, report.roc_auc
    )
}

// ---------------------------------------------------------------------------
// gen-data

#[derive(clap::Args, Debug)]
pub struct GenDataArgs {
    /// Number of clips.
    #[arg(long, default_value_t = SynthConfig::default().n_clips)]
    pub clips: usize,
    /// Number of label classes.
    #[arg(long, default_value_t = SynthConfig::default().n_classes)]
    pub classes: usize,
    /// Latent content dimension behind inputs, teachers, and labels.
    #[arg(long, default_value_t = SynthConfig::default().latent_dim)]
    pub latent: usize,
    /// Frames per clip.
    #[arg(long, default_value_t = SynthConfig::default().frames)]
    pub frames: usize,
    /// Input channels per frame.
    #[arg(long, default_value_t = SynthConfig::default().input_channels)]
    pub channels: usize,
    /// Teacher embedding channels (at most the latent dimension).
    #[arg(long, default_value_t = SynthConfig::default().teacher_channels)]
    pub teacher_channels: usize,
    /// Teacher corruption noise; 0 keeps the teacher strong.
    #[arg(long, default_value_t = SynthConfig::default().teacher_noise)]
    pub teacher_noise: f64,
    /// Probability that a (clip, class) label is observed.
    #[arg(long, default_value_t = SynthConfig::default().mask_observe_prob)]
    pub observe_prob: f64,
    /// Generation seed.
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    pub seed: u64,
    /// Output container path.
    #[arg(short, long)]
    pub out: PathBuf,
}

pub fn gen_data(args: &GenDataArgs, started: Instant) -> Result<(), CliError> {
    let config = SynthConfig {
        n_clips: args.clips,
        n_classes: args.classes,
        latent_dim: args.latent,
        frames: args.frames,
        input_channels: args.channels,
        teacher_channels: args.teacher_channels,
        teacher_noise: args.teacher_noise,
        mask_observe_prob: args.observe_prob,
        seed: args.seed,
    };
    let ds = data::generate(&config)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    data::write_container(&args.out, &ds)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out.display())))?;

    let mut manifest = RunManifest::new(
        "gen-data",
        args.seed,
        json!({
            "clips": args.clips,
            "classes": args.classes,
            "latent": args.latent,
            "frames": args.frames,
            "channels": args.channels,
            "teacher_channels": args.teacher_channels,
            "teacher_noise": args.teacher_noise,
            "observe_prob": args.observe_prob,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.artifact(&args.out);
    manifest.write(&manifest_path(&args.out), started)?;

    println!(
        "wrote {}: {} clips, {} classes, {} frames x {} input channels, \
         {} teacher channels (noise {}), seed {}",
        args.out.display(),
        args.clips,
        args.classes,
        args.frames,
        args.channels,
        args.teacher_channels,
        args.teacher_noise,
        args.seed
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Dataset container to train on.
    #[arg(long)]
    pub data: PathBuf,
    /// System: baseline, teacher-lr, kd, east-cos-diff, east-final,
    /// east-all, or east-kd.
    #[arg(long)]
    pub system: String,
    /// Student stages as OUTxPOOL pairs; input channels come from the
    /// dataset.
    #[arg(long, default_value = DEFAULT_ARCH)]
    pub arch: String,
    /// Feature-regularizer weight λ in [0, 1].
    #[arg(long, default_value_t = SystemConfig::default().lambda)]
    pub lambda: f64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Teacher checkpoint; required by the distillation systems.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// Embedding tag for the metrics row (default: dataset file stem).
    #[arg(long)]
    pub tag: Option<String>,
    /// Directory for checkpoint, history, metrics, and manifest.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

pub fn train(args: &TrainArgs, started: Instant) -> Result<(), CliError> {
    let variant = parse_system(&args.system)?;
    let cfg = args.hyper.system_config(variant, args.lambda)?;
    let teacher = load_teacher(args.teacher.as_deref(), variant)?;
    let ds = read_dataset(&args.data)?;
    let splits = split_dataset(&ds, &args.split)?;
    let arch = stage_specs(splits.train.input_channels, &parse_arch(&args.arch)?);

    let result = trainer::train_system(&arch, &cfg, &splits, teacher.as_ref())?;

    let tag = args.tag.clone().unwrap_or_else(|| dataset_tag(&args.data));
    ensure_dir(&args.out_dir)?;
    let prefix = format!("{variant}-{tag}");
    let checkpoint = args.out_dir.join(format!("{prefix}.ckpt"));
    result.model.save(&checkpoint)?;
    let history = args.out_dir.join(format!("{prefix}-history.tsv"));
    write_text(&history, &trainer::history_tsv(&result.history))?;
    let metrics = args.out_dir.join(format!("{prefix}-metrics.tsv"));
    let table = metrics_table(variant, &tag, &result.test);
    write_text(&metrics, &table)?;

    let mut config = args.hyper.config_json();
    for (key, value) in [
        ("data", json!(args.data.display().to_string())),
        ("system", json!(variant.name())),
        ("arch", json!(args.arch)),
        ("lambda", json!(args.lambda)),
        ("split", json!(args.split.split)),
        ("split_seed", json!(args.split.split_seed)),
        ("teacher", json!(args.teacher.as_ref().map(|p| p.display().to_string()))),
        ("tag", json!(tag)),
        ("out_dir", json!(args.out_dir.display().to_string())),
    ] {
        config[key] = value;
    }
    let mut manifest = RunManifest::new("train", cfg.seed, config);
    manifest.artifact(&checkpoint);
    manifest.artifact(&history);
    manifest.artifact(&metrics);
    manifest.write(&args.out_dir.join(format!("{prefix}.manifest.json")), started)?;

    print!("{table}");
    let best = &result.history[result.best_epoch];
    println!(
        "best epoch {} of {} trained: val mAP {:.4}",
        best.epoch,
        result.history.len(),
        best.val_map
    );
    println!(
        "wrote {}, {}, {}",
        checkpoint.display(),
        history.display(),
        metrics.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(clap::Args, Debug)]
pub struct SweepArgs {
    /// Dataset container to train on.
    #[arg(long)]
    pub data: PathBuf,
    /// System whose λ is searched.
    #[arg(long, default_value = "east-final")]
    pub system: String,
    /// Student stages as OUTxPOOL pairs.
    #[arg(long, default_value = DEFAULT_ARCH)]
    pub arch: String,
    /// Comma-separated λ grid (default: 0.1 through 0.9 by 0.1).
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Teacher checkpoint; required by the distillation systems.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// Embedding tag for output names (default: dataset file stem).
    #[arg(long)]
    pub tag: Option<String>,
    /// Directory for the sweep table and manifest.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

pub fn sweep(args: &SweepArgs, started: Instant) -> Result<(), CliError> {
    let variant = parse_system(&args.system)?;
    let base = args
        .hyper
        .system_config(variant, SystemConfig::default().lambda)?;
    let grid = match &args.grid {
        Some(s) => parse_f64_list(s, "lambda")?,
        None => DEFAULT_LAMBDA_GRID.to_vec(),
    };
    let teacher = load_teacher(args.teacher.as_deref(), variant)?;
    let ds = read_dataset(&args.data)?;
    let splits = split_dataset(&ds, &args.split)?;
    let arch = stage_specs(splits.train.input_channels, &parse_arch(&args.arch)?);

    let outcome = trainer::sweep_lambda(
        &arch,
        &base,
        &splits,
        teacher.as_ref(),
        &grid,
        trainer::configured_threads(),
    )?;

    let tag = args.tag.clone().unwrap_or_else(|| dataset_tag(&args.data));
    ensure_dir(&args.out_dir)?;
    let table = trainer::sweep_tsv(&outcome.rows);
    let path = args.out_dir.join(format!("{variant}-{tag}-sweep.tsv"));
    write_text(&path, &table)?;

    let mut config = args.hyper.config_json();
    for (key, value) in [
        ("data", json!(args.data.display().to_string())),
        ("system", json!(variant.name())),
        ("arch", json!(args.arch)),
        ("grid", json!(grid)),
        ("split", json!(args.split.split)),
        ("split_seed", json!(args.split.split_seed)),
        ("teacher", json!(args.teacher.as_ref().map(|p| p.display().to_string()))),
        ("tag", json!(tag)),
        ("out_dir", json!(args.out_dir.display().to_string())),
    ] {
        config[key] = value;
    }
    let mut manifest = RunManifest::new("sweep", base.seed, config);
    manifest.artifact(&path);
    manifest.write(&manifest_path(&path), started)?;

    print!("{table}");
    println!("best lambda: {}", outcome.best_lambda);
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// limited

#[derive(clap::Args, Debug)]
pub struct LimitedArgs {
    /// Dataset container to train on.
    #[arg(long)]
    pub data: PathBuf,
    /// Student stages as OUTxPOOL pairs.
    #[arg(long, default_value = DEFAULT_ARCH)]
    pub arch: String,
    /// Comma-separated train-set fractions.
    #[arg(long, default_value = "0.25,0.5,0.75,1.0")]
    pub fractions: String,
    /// Number of run seeds, counting up from --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Feature-regularizer weight λ in [0, 1].
    #[arg(long, default_value_t = SystemConfig::default().lambda)]
    pub lambda: f64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Embedding tag for output names (default: dataset file stem).
    #[arg(long)]
    pub tag: Option<String>,
    /// Directory for the results table and manifest.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

pub fn limited(args: &LimitedArgs, started: Instant) -> Result<(), CliError> {
    // The experiment overrides variant and seed per row; the teacher is
    // refit on each reduced train split internally.
    let base = args
        .hyper
        .system_config(SystemVariant::Baseline, args.lambda)?;
    let fractions = parse_f64_list(&args.fractions, "fraction")?;
    let seeds = seed_range(args.hyper.seed, args.seeds);
    let ds = read_dataset(&args.data)?;
    let spec = args.split.spec()?;
    let arch = stage_specs(ds.input_channels, &parse_arch(&args.arch)?);

    let rows = trainer::limited_data_experiment(
        &arch,
        &base,
        &ds,
        &spec,
        &fractions,
        &seeds,
        trainer::configured_threads(),
    )?;

    let tag = args.tag.clone().unwrap_or_else(|| dataset_tag(&args.data));
    ensure_dir(&args.out_dir)?;
    let table = trainer::limited_tsv(&rows);
    let path = args.out_dir.join(format!("limited-{tag}.tsv"));
    write_text(&path, &table)?;

    let mut config = args.hyper.config_json();
    for (key, value) in [
        ("data", json!(args.data.display().to_string())),
        ("arch", json!(args.arch)),
        ("fractions", json!(fractions)),
        ("seeds", json!(seeds)),
        ("lambda", json!(args.lambda)),
        ("split", json!(args.split.split)),
        ("split_seed", json!(args.split.split_seed)),
        ("tag", json!(tag)),
        ("out_dir", json!(args.out_dir.display().to_string())),
    ] {
        config[key] = value;
    }
    let mut manifest = RunManifest::new("limited", args.hyper.seed, config);
    manifest.artifact(&path);
    manifest.write(&manifest_path(&path), started)?;

    print!("{table}");
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// complexity

#[derive(clap::Args, Debug)]
pub struct ComplexityArgs {
    /// Student stages as OUTxPOOL pairs.
    #[arg(long, default_value = DEFAULT_ARCH)]
    pub arch: String,
    /// Input channels of the probe clip.
    #[arg(long, default_value_t = 128)]
    pub channels: usize,
    /// Frames of the probe clip.
    #[arg(long, default_value_t = 1000)]
    pub frames: usize,
    /// Classes of the prediction head (excluded from the parameter count).
    #[arg(long, default_value_t = SynthConfig::default().n_classes)]
    pub classes: usize,
    /// Minimum measurement time in seconds.
    #[arg(long, default_value_t = 2.0)]
    pub seconds: f64,
    /// Initialization seed; the parameter count does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the report and manifest.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

pub fn complexity(args: &ComplexityArgs, started: Instant) -> Result<(), CliError> {
    let stages = stage_specs(args.channels, &parse_arch(&args.arch)?);
    let net = StudentNet::init(&stages, args.classes, args.seed)
        .map_err(|e| CliError::Usage(format!("invalid student configuration: {e}")))?;
    let throughput = throughput_bench(&net, args.frames, args.seconds).map_err(|e| match e {
        ModelError::BadHyper { .. } | ModelError::EmptyDataset => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;

    let rows = [ComplexityRow {
        name: args.arch.clone(),
        backbone_params: net.param_count(false),
        throughput,
    }];
    let report = complexity_report(&rows);

    ensure_dir(&args.out_dir)?;
    let path = args.out_dir.join("complexity.tsv");
    write_text(&path, &report)?;

    let mut manifest = RunManifest::new(
        "complexity",
        args.seed,
        json!({
            "arch": args.arch,
            "channels": args.channels,
            "frames": args.frames,
            "classes": args.classes,
            "seconds": args.seconds,
            "out_dir": args.out_dir.display().to_string(),
        }),
    );
    manifest.artifact(&path);
    manifest.write(&manifest_path(&path), started)?;

    print!("{report}");
    Ok(())
}

// ---------------------------------------------------------------------------
// selftest

#[derive(clap::Args, Debug)]
pub struct SelftestArgs {
    /// Accepted for interface uniformity; the checks use fixed seeds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the report and manifest.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

pub fn selftest(args: &SelftestArgs, started: Instant) -> Result<(), CliError> {
    let outcomes = east_core::selftest::run_all();
    let mut report = String::new();
    for outcome in &outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        let line = format!("{}: {status} - {}", outcome.name, outcome.detail);
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let summary = if failed == 0 {
        format!("all {} checks passed", outcomes.len())
    } else {
        format!("{failed} of {} checks failed", outcomes.len())
    };
    println!("{summary}");
    report.push_str(&summary);
    report.push('\n');

    ensure_dir(&args.out_dir)?;
    let path = args.out_dir.join("selftest.txt");
    write_text(&path, &report)?;
    let mut manifest = RunManifest::new(
        "selftest",
        args.seed,
        json!({ "out_dir": args.out_dir.display().to_string() }),
    );
    manifest.artifact(&path);
    manifest.write(&manifest_path(&path), started)?;

    if failed > 0 {
        Err(CliError::Runtime(summary))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
