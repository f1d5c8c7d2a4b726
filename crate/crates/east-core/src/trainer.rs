//! Deterministic mini-batch training for the seven systems, λ grid search
//! on validation, and the limited-training-data protocol.
//!
//! Everything here is reproducible to the bit: one ChaCha8 stream (derived
//! from the config seed) orders the mini-batches, another initializes the
//! model, and the numeric kernels never reassociate. Running the same
//! config twice yields identical histories and identical checkpoint bytes;
//! the grid/limited drivers produce byte-identical tables whether they run
//! serially or across threads.

use crate::data::{DataError, Dataset, SplitSpec};
use crate::linalg::{sigmoid, Matrix, NumericError};
use crate::losses::{
    kd_loss, masked_bce, system_loss, CompositeWeights, LabelBatch, LossError, SystemVariant,
};
use crate::measures::{regularization_loss, MeasureError, MeasureKind};
use crate::metrics::{evaluate, MetricError, MetricsReport, DEFAULT_THRESHOLD};
use crate::models::{
    seeded_rng, teacher_fit, teacher_predict_logits, ModelError, StageSpec, StudentNet, TeacherLr,
    DEFAULT_TEACHER_EPOCHS, DEFAULT_TEACHER_LR,
};
use crate::autodiff::{Tape, Var};
use rand::seq::SliceRandom;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

/// Momentum coefficient of the SGD optimizer.
pub const MOMENTUM: f64 = 0.9;

/// Default λ grid for the validation search.
pub const DEFAULT_LAMBDA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Default training-set fractions of the limited-data protocol.
pub const DEFAULT_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// The four systems compared under limited training data.
pub const LIMITED_SYSTEMS: [SystemVariant; 4] = [
    SystemVariant::Baseline,
    SystemVariant::Kd,
    SystemVariant::EastCosDiff,
    SystemVariant::EastFinal,
];

/// Salt XORed into the config seed to derive the batch-shuffle stream, so
/// shuffling is independent of parameter initialization but still a pure
/// function of the seed.
const SHUFFLE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {reason}")]
    InvalidConfig { reason: String },
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Measure {
        epoch: usize,
        batch: usize,
        #[source]
        source: MeasureError,
    },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Full configuration of one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub variant: SystemVariant,
    /// Weight of the feature-space regularizer.
    pub lambda: f64,
    /// Weight of the distillation term inside the prediction mix.
    pub alpha: f64,
    /// Distillation softening temperature.
    pub temperature: f64,
    /// Which regularizer the EAsT variants apply (normalized per variant).
    pub measure: MeasureKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs without val-mAP improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            variant: SystemVariant::Baseline,
            lambda: 0.5,
            alpha: 0.5,
            temperature: 2.0,
            measure: MeasureKind::DistanceCorrelation,
            epochs: 60,
            batch_size: 16,
            lr: 0.05,
            patience: 10,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Copy with the measure forced to the variant's own definition: the
    /// cosine variant always uses cosine-distance differences, the other
    /// feature-space variants always use distance correlation.
    pub fn normalized(&self) -> SystemConfig {
        let mut c = *self;
        c.measure = match self.variant {
            SystemVariant::EastCosDiff => MeasureKind::CosDiff,
            SystemVariant::EastFinal | SystemVariant::EastAll | SystemVariant::EastKd => {
                MeasureKind::DistanceCorrelation
            }
            _ => self.measure,
        };
        c
    }

    fn validate(&self) -> Result<(), TrainError> {
        let fail = |reason: String| Err(TrainError::InvalidConfig { reason });
        for (name, v) in [("lambda", self.lambda), ("alpha", self.alpha)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return fail(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return fail(format!("temperature = {} must be positive", self.temperature));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size < 2 {
            return fail("batch_size must be at least 2 (pairwise measures need 2 samples)".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("lr = {} must be positive", self.lr));
        }
        if self.patience == 0 {
            return fail("patience must be at least 1".into());
        }
        Ok(())
    }
}

/// The three partitions one experiment runs over.
#[derive(Debug, Clone)]
pub struct SplitDatasets {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// One history line: epoch index (0-based), mean train loss over the
/// epoch's batches, validation mAP after the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_map: f64,
}

/// The trained model of a run: a student network, or the embedding-side
/// logistic regression when the system is the teacher itself.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Student(StudentNet),
    Teacher(TeacherLr),
}

impl TrainedModel {
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        match self {
            TrainedModel::Student(net) => net.save(path),
            TrainedModel::Teacher(t) => t.save(path),
        }
    }
}

/// Everything a run produces: best-epoch model, history, and test metrics.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: TrainedModel,
    pub history: Vec<EpochRecord>,
    /// Index into `history` of the epoch with the best validation mAP.
    pub best_epoch: usize,
    pub test: MetricsReport,
}

/// Fit the embedding-side logistic-regression teacher on a dataset's
/// teacher sequences and observed labels.
pub fn fit_teacher(ds: &Dataset, seed: u64) -> Result<TeacherLr, TrainError> {
    let (targets, mask) = ds.label_matrices();
    let labels = LabelBatch::new(targets, mask)?;
    Ok(teacher_fit(
        &ds.teachers,
        &labels,
        DEFAULT_TEACHER_EPOCHS,
        DEFAULT_TEACHER_LR,
        seed,
    )?)
}

fn batch_labels(ds: &Dataset, idx: &[usize]) -> (Matrix, Matrix) {
    let k = ds.n_classes;
    let mut targets = Matrix::zeros(idx.len(), k);
    let mut mask = Matrix::zeros(idx.len(), k);
    for (row, &i) in idx.iter().enumerate() {
        for c in 0..k {
            targets.set(row, c, ds.clips[i].targets[c] as f64);
            mask.set(row, c, ds.clips[i].mask[c] as f64);
        }
    }
    (targets, mask)
}

/// Per-clip sigmoid scores of a student over a dataset, as `n x K`.
fn student_scores(net: &StudentNet, ds: &Dataset) -> Result<Matrix, TrainError> {
    let mut scores = Matrix::zeros(ds.len(), ds.n_classes);
    for (i, clip) in ds.clips.iter().enumerate() {
        let (logits, _) = net.predict(&clip.frames)?;
        for (c, z) in logits.iter().enumerate() {
            scores.set(i, c, sigmoid(*z));
        }
    }
    Ok(scores)
}

fn teacher_scores(model: &TeacherLr, ds: &Dataset) -> Result<Matrix, TrainError> {
    let mut scores = Matrix::zeros(ds.len(), ds.n_classes);
    for (i, seq) in ds.teachers.iter().enumerate() {
        let logits = teacher_predict_logits(model, seq)?;
        for (c, z) in logits.iter().enumerate() {
            scores.set(i, c, sigmoid(*z));
        }
    }
    Ok(scores)
}

fn evaluate_scores(scores: &Matrix, ds: &Dataset) -> Result<MetricsReport, TrainError> {
    let (targets, mask) = ds.label_matrices();
    Ok(evaluate(scores, &targets, &mask, DEFAULT_THRESHOLD)?)
}

/// Mean masked BCE of fixed logits against a dataset's labels (reporting
/// only; no gradients).
fn plain_bce_value(logits: &Matrix, ds: &Dataset) -> Result<f64, TrainError> {
    let (targets, mask) = ds.label_matrices();
    let labels = LabelBatch::new(targets, mask)?;
    let mut tape = Tape::new();
    let z = tape.constant(logits.clone());
    let loss = masked_bce(&mut tape, z, &labels)?;
    Ok(tape.scalar_value(loss))
}

/// One optimizer step over every mini-batch of one epoch. Returns the
/// sample-weighted mean batch loss.
fn run_student_epoch(
    net: &mut StudentNet,
    velocity: &mut [Matrix],
    cfg: &SystemConfig,
    train: &Dataset,
    teacher: Option<&TeacherLr>,
    order: &[usize],
    epoch: usize,
) -> Result<f64, TrainError> {
    let weights = CompositeWeights::new(cfg.lambda, cfg.alpha, cfg.temperature)?;
    let n_stages = net.stages().len();
    let mut loss_sum = 0.0;
    let mut sample_count = 0usize;

    for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
        // Pairwise measures need two samples; a trailing singleton is
        // dropped for every system so composite objectives stay comparable.
        if chunk.len() < 2 {
            continue;
        }
        let mut tape = Tape::new();
        let vars = net.insert_params(&mut tape);
        let mut logit_vars = Vec::with_capacity(chunk.len());
        let mut stage_taps: Vec<Vec<Var>> = vec![Vec::with_capacity(chunk.len()); n_stages];
        for &i in chunk {
            let fwd = net.forward_on(&mut tape, &vars, &train.clips[i].frames)?;
            logit_vars.push(fwd.logits);
            for (s, tap) in fwd.taps.into_iter().enumerate() {
                stage_taps[s].push(tap);
            }
        }
        let logits = tape.vstack(&logit_vars).map_err(TrainError::Numeric)?;
        let (targets, mask) = batch_labels(train, chunk);
        let labels = LabelBatch::new(targets, mask)?;
        let pred = masked_bce(&mut tape, logits, &labels)?;

        let kd = if cfg.variant.uses_kd() {
            let model = teacher.ok_or(LossError::MissingComponent {
                system: cfg.variant.name(),
                component: "fitted teacher model",
            })?;
            let mut rows = Vec::with_capacity(chunk.len());
            for &i in chunk {
                rows.push(teacher_predict_logits(model, &train.teachers[i])?);
            }
            let teacher_logits = Matrix::from_rows(&rows)?;
            Some(kd_loss(
                &mut tape,
                logits,
                &teacher_logits,
                cfg.temperature,
                labels.mask(),
            )?)
        } else {
            None
        };

        let reg_by_stage = if cfg.variant.uses_regularizer() {
            let teacher_batch: Vec<Matrix> =
                chunk.iter().map(|&i| train.teachers[i].clone()).collect();
            let stages: Vec<usize> = if cfg.variant.regularizes_all_stages() {
                (0..n_stages).collect()
            } else {
                vec![n_stages - 1]
            };
            let mut regs = Vec::with_capacity(stages.len());
            for s in stages {
                let reg = regularization_loss(&mut tape, cfg.measure, &stage_taps[s], &teacher_batch)
                    .map_err(|source| TrainError::Measure {
                        epoch,
                        batch: batch_no,
                        source,
                    })?;
                regs.push(reg);
            }
            regs
        } else {
            Vec::new()
        };

        let loss = system_loss(&mut tape, cfg.variant, pred, kd, &reg_by_stage, &weights)?;
        let loss_value = tape.scalar_value(loss);
        if !loss_value.is_finite() {
            return Err(TrainError::Numeric(NumericError::NonFiniteValue {
                op: "training loss",
            }));
        }
        let grads = tape.backward(loss)?;

        let ordered = vars.ordered();
        for ((param, var), vel) in net
            .params_mut()
            .into_iter()
            .zip(ordered.iter())
            .zip(velocity.iter_mut())
        {
            let mut v = vel.scale(MOMENTUM);
            if let Some(g) = grads.wrt(*var) {
                v = v.add(g)?;
            }
            *param = param.sub(&v.scale(cfg.lr))?;
            *vel = v;
        }
        loss_sum += loss_value * chunk.len() as f64;
        sample_count += chunk.len();
    }

    if sample_count == 0 {
        return Err(TrainError::InvalidConfig {
            reason: "no usable mini-batch: every batch had fewer than 2 samples".into(),
        });
    }
    Ok(loss_sum / sample_count as f64)
}

/// Train one system on the given splits.
///
/// Students run seeded shuffled mini-batches of `batch_size` under SGD with
/// momentum, early-stop after `patience` epochs without validation-mAP
/// improvement, restore the best-epoch parameters, and report test metrics.
/// The `teacher-lr` variant instead fits the embedding-side logistic
/// regression on the train split (with the teacher's own fixed epoch/lr
/// schedule) and reports a single history record.
///
/// Distillation variants require `teacher`; feature-space variants read the
/// teacher sequences carried by the datasets. The teacher is never updated.
pub fn train_system(
    arch: &[StageSpec],
    config: &SystemConfig,
    splits: &SplitDatasets,
    teacher: Option<&TeacherLr>,
) -> Result<TrainResult, TrainError> {
    config.validate()?;
    let cfg = config.normalized();

    if cfg.variant.uses_kd() && teacher.is_none() {
        return Err(TrainError::Loss(LossError::MissingComponent {
            system: cfg.variant.name(),
            component: "fitted teacher model",
        }));
    }

    if cfg.variant == SystemVariant::TeacherLr {
        let model = fit_teacher(&splits.train, cfg.seed)?;
        let train_logits = {
            let mut m = Matrix::zeros(splits.train.len(), splits.train.n_classes);
            for (i, seq) in splits.train.teachers.iter().enumerate() {
                for (c, z) in teacher_predict_logits(&model, seq)?.iter().enumerate() {
                    m.set(i, c, *z);
                }
            }
            m
        };
        let train_loss = plain_bce_value(&train_logits, &splits.train)?;
        let val_map = evaluate_scores(&teacher_scores(&model, &splits.val)?, &splits.val)?.map;
        let test = evaluate_scores(&teacher_scores(&model, &splits.test)?, &splits.test)?;
        return Ok(TrainResult {
            model: TrainedModel::Teacher(model),
            history: vec![EpochRecord {
                epoch: 0,
                train_loss,
                val_map,
            }],
            best_epoch: 0,
            test,
        });
    }

    let mut net = StudentNet::init(arch, splits.train.n_classes, cfg.seed)?;
    let mut velocity: Vec<Matrix> = net
        .params()
        .iter()
        .map(|p| Matrix::zeros(p.rows(), p.cols()))
        .collect();
    let mut shuffle_rng = seeded_rng(cfg.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..splits.train.len()).collect();

    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(usize, f64, Vec<Matrix>)> = None;
    let mut stale_epochs = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let train_loss =
            run_student_epoch(&mut net, &mut velocity, &cfg, &splits.train, teacher, &order, epoch)?;
        let val_map = evaluate_scores(&student_scores(&net, &splits.val)?, &splits.val)?.map;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_map,
        });

        let improved = best.as_ref().map_or(true, |(_, b, _)| val_map > *b);
        if improved {
            let snapshot = net.params().into_iter().cloned().collect();
            best = Some((epoch, val_map, snapshot));
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                break;
            }
        }
    }

    let (best_epoch, _, snapshot) = best.expect("at least one epoch ran");
    for (dst, src) in net.params_mut().into_iter().zip(snapshot.iter()) {
        *dst = src.clone();
    }
    let test = evaluate_scores(&student_scores(&net, &splits.test)?, &splits.test)?;
    Ok(TrainResult {
        model: TrainedModel::Student(net),
        history,
        best_epoch,
        test,
    })
}

/// Worker count taken from the `EAST_THREADS` environment variable
/// (default 1).
pub fn configured_threads() -> usize {
    std::env::var("EAST_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

/// Run `task(0..n)` on up to `threads` workers and return results in index
/// order. Tasks share no mutable state, so the output — including which
/// error surfaces, the lowest failing index — is identical to a serial run.
pub fn run_indexed<T: Send>(
    n: usize,
    threads: usize,
    task: impl Fn(usize) -> Result<T, TrainError> + Sync,
) -> Result<Vec<T>, TrainError> {
    if threads <= 1 || n <= 1 {
        return (0..n).map(&task).collect();
    }
    let slots: Mutex<Vec<Option<Result<T, TrainError>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let result = task(i);
                slots.lock().expect("result lock")[i] = Some(result);
            });
        }
    });
    let mut out = Vec::with_capacity(n);
    for slot in slots.into_inner().expect("result lock") {
        out.push(slot.expect("every index claimed")?);
    }
    Ok(out)
}

/// One row of the λ search table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    /// Validation mAP at the run's best epoch.
    pub val_map: f64,
    pub test_map: f64,
}

/// λ search result: the winning value and the full table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub best_lambda: f64,
    pub rows: Vec<SweepRow>,
}

fn best_row(rows: &[SweepRow]) -> usize {
    // Rows are in ascending λ; strict improvement keeps the smaller λ on a
    // tie.
    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.val_map > rows[best].val_map {
            best = i;
        }
    }
    best
}

/// Train one run per grid value of λ (deduplicated, ascending) and pick the
/// best validation mAP, ties resolved toward the smaller λ.
pub fn sweep_lambda(
    arch: &[StageSpec],
    base: &SystemConfig,
    splits: &SplitDatasets,
    teacher: Option<&TeacherLr>,
    grid: &[f64],
    threads: usize,
) -> Result<SweepOutcome, TrainError> {
    if grid.is_empty() {
        return Err(TrainError::InvalidConfig {
            reason: "λ grid is empty".into(),
        });
    }
    let mut lambdas: Vec<f64> = grid.to_vec();
    for &l in &lambdas {
        if !(0.0..=1.0).contains(&l) || !l.is_finite() {
            return Err(TrainError::InvalidConfig {
                reason: format!("λ = {l} must lie in [0, 1]"),
            });
        }
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();

    let rows = run_indexed(lambdas.len(), threads, |i| {
        let mut cfg = *base;
        cfg.lambda = lambdas[i];
        let result = train_system(arch, &cfg, splits, teacher)?;
        Ok(SweepRow {
            lambda: lambdas[i],
            val_map: result.history[result.best_epoch].val_map,
            test_map: result.test.map,
        })
    })?;

    Ok(SweepOutcome {
        best_lambda: rows[best_row(&rows)].lambda,
        rows,
    })
}

/// One row of the limited-data table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitedRow {
    pub system: SystemVariant,
    pub fraction: f64,
    pub seed: u64,
    pub test_map: f64,
}

/// The limited-training-data protocol: for every (fraction, seed), split
/// with the train partition truncated to that fraction (validation and
/// test stay fixed because the split seed is fixed), fit a teacher on the
/// reduced train split, and train the four compared systems. Rows come out
/// fraction-major, then seed, then system.
///
/// `base` supplies the shared hyperparameters; its variant and seed are
/// overridden per row.
pub fn limited_data_experiment(
    arch: &[StageSpec],
    base: &SystemConfig,
    ds: &Dataset,
    split_spec: &SplitSpec,
    fractions: &[f64],
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<LimitedRow>, TrainError> {
    if fractions.is_empty() || seeds.is_empty() {
        return Err(TrainError::InvalidConfig {
            reason: "limited-data run needs at least one fraction and one seed".into(),
        });
    }
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(TrainError::InvalidConfig {
                reason: format!("fraction = {f} must lie in (0, 1]"),
            });
        }
    }

    let tasks: Vec<(f64, u64)> = fractions
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| (f, s)))
        .collect();
    let groups = run_indexed(tasks.len(), threads, |i| {
        let (fraction, seed) = tasks[i];
        let (train, val, test) = crate::data::split(ds, &split_spec.with_limit(fraction))?;
        let splits = SplitDatasets { train, val, test };
        let teacher = fit_teacher(&splits.train, seed)?;
        let mut rows = Vec::with_capacity(LIMITED_SYSTEMS.len());
        for variant in LIMITED_SYSTEMS {
            let mut cfg = *base;
            cfg.variant = variant;
            cfg.seed = seed;
            let result = train_system(arch, &cfg, &splits, Some(&teacher))?;
            rows.push(LimitedRow {
                system: variant,
                fraction,
                seed,
                test_map: result.test.map,
            });
        }
        Ok(rows)
    })?;
    let rows: Vec<LimitedRow> = groups.into_iter().flatten().collect();

    // Direction check (informational): less data should not help.
    let low = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    let high = fractions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if low < high {
        for variant in LIMITED_SYSTEMS {
            let mean_at = |f: f64| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.system == variant && r.fraction == f)
                    .map(|r| r.test_map)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            let (m_low, m_high) = (mean_at(low), mean_at(high));
            if m_low <= m_high {
                log::info!(
                    "{variant}: mean test mAP {m_low:.4} at {low} ≤ {m_high:.4} at {high}"
                );
            } else {
                log::warn!(
                    "{variant}: mean test mAP at fraction {low} ({m_low:.4}) exceeds full data ({m_high:.4})"
                );
            }
        }
    }
    Ok(rows)
}

/// History as TSV: epoch, mean train loss, validation mAP.
pub fn history_tsv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch\ttrain_loss\tval_map\n");
    for r in history {
        out.push_str(&format!("{}\t{:.6}\t{:.4}\n", r.epoch, r.train_loss, r.val_map));
    }
    out
}

/// λ search table as TSV.
pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda\tval_map\ttest_map\n");
    for r in rows {
        out.push_str(&format!("{}\t{:.4}\t{:.4}\n", r.lambda, r.val_map, r.test_map));
    }
    out
}

/// Limited-data long-format table as TSV.
pub fn limited_tsv(rows: &[LimitedRow]) -> String {
    let mut out = String::from("system\tfraction\tseed\tmap\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            r.system, r.fraction, r.seed, r.test_map
        ));
    }
    out
}
