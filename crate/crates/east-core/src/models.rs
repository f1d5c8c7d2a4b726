//! Model architectures: the low-complexity student network, the
//! logistic-regression teacher head, checkpoints, and complexity probes.
//!
//! A student is a chain of stages. Each stage applies a linear map per
//! frame, mean-pools over time by the stage's pooling factor, and hands a
//! ReLU of its output to the next stage. The **tap** of a stage — what the
//! feature-space regularizers see — is the pooled linear output, before the
//! ReLU, so taps almost surely contain no all-zero frame vectors. The head
//! averages the final (activated) feature map over time and applies one
//! linear map to produce per-class logits.
//!
//! The teacher head is plain logistic regression on time-averaged teacher
//! embeddings, trained by full-batch gradient descent; it both serves as the
//! embedding-quality probe and supplies the soft targets for distillation.

use crate::autodiff::{Tape, Var};
use crate::byteio::{ByteIoError, CountingReader};
use crate::linalg::{Matrix, NumericError};
use crate::losses::{masked_bce, LabelBatch, LossError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Checkpoint file magic bytes.
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"EASM";
/// Current checkpoint format version; readers reject anything else.
pub const CHECKPOINT_VERSION: u32 = 1;

const KIND_STUDENT: u8 = 1;
const KIND_TEACHER: u8 = 2;

/// Full-batch gradient-descent settings for the teacher head. Deliberately
/// plain (no momentum, no stochasticity beyond the init seed) so teacher
/// fits are cheap to reason about and reproduce.
pub const DEFAULT_TEACHER_EPOCHS: usize = 500;
pub const DEFAULT_TEACHER_LR: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("architecture has no stages")]
    EmptyArchitecture,
    #[error("stage {index} is invalid: {reason}")]
    BadStage { index: usize, reason: &'static str },
    #[error("stage {index} expects {expected} input channels but the previous stage emits {got}")]
    StageChain {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("input has {got_cols} channels; the network expects {expected_cols}")]
    InputShape {
        expected_cols: usize,
        got_cols: usize,
    },
    #[error("no samples provided")]
    EmptyDataset,
    #[error("{name} = {value} is not a usable hyperparameter value")]
    BadHyper { name: &'static str, value: f64 },
    #[error("checkpoint malformed at byte {offset}: {reason}")]
    CheckpointFormat { offset: u64, reason: String },
    #[error("checkpoint version {found} is not supported (expected {CHECKPOINT_VERSION})")]
    CheckpointVersion { found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl From<ByteIoError> for ModelError {
    fn from(e: ByteIoError) -> Self {
        match e {
            ByteIoError::Eof { offset } => ModelError::CheckpointFormat {
                offset,
                reason: "unexpected end of file".into(),
            },
            ByteIoError::Io(e) => ModelError::Io(e),
        }
    }
}

/// Deterministic RNG used everywhere a seed appears in an interface.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. U(-half_width, half_width) entries, drawn row-major.
pub fn random_uniform(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    half_width: f64,
) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| (2.0 * rng.random::<f64>() - 1.0) * half_width)
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized draw")
}

/// Matrix with i.i.d. standard normal entries, drawn row-major.
pub fn random_normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized draw")
}

/// `rows x cols` matrix with orthonormal rows (`Q Q^T = I`), built by
/// Gram-Schmidt over Gaussian draws. Requires `rows <= cols`. Square output
/// is a uniform-ish random orthogonal matrix, which is what the invariance
/// checks need.
pub fn random_orthonormal_rows(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
) -> Result<Matrix, NumericError> {
    if rows == 0 || cols == 0 || rows > cols {
        return Err(NumericError::DimensionMismatch {
            op: "random_orthonormal_rows",
            left_rows: rows,
            left_cols: cols,
            right_rows: cols,
            right_cols: cols,
        });
    }
    let mut q = Matrix::zeros(rows, cols);
    let mut r = 0;
    while r < rows {
        let mut v: Vec<f64> = (0..cols)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        for prev in 0..r {
            let dot: f64 = (0..cols).map(|c| v[c] * q.get(prev, c)).sum();
            for c in 0..cols {
                v[c] -= dot * q.get(prev, c);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            // Degenerate draw (essentially impossible); try again.
            continue;
        }
        for c in 0..cols {
            q.set(r, c, v[c] / norm);
        }
        r += 1;
    }
    Ok(q)
}

/// One student stage: a per-frame linear map followed by temporal mean
/// pooling with the given factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub temporal_pool: usize,
}

impl StageSpec {
    pub fn new(in_channels: usize, out_channels: usize, temporal_pool: usize) -> Self {
        StageSpec {
            in_channels,
            out_channels,
            temporal_pool,
        }
    }
}

fn validate_stages(stages: &[StageSpec], n_classes: usize) -> Result<(), ModelError> {
    if stages.is_empty() {
        return Err(ModelError::EmptyArchitecture);
    }
    if n_classes == 0 {
        return Err(ModelError::BadStage {
            index: 0,
            reason: "zero output classes",
        });
    }
    for (i, s) in stages.iter().enumerate() {
        if s.in_channels == 0 || s.out_channels == 0 {
            return Err(ModelError::BadStage {
                index: i,
                reason: "zero channel count",
            });
        }
        if s.temporal_pool == 0 {
            return Err(ModelError::BadStage {
                index: i,
                reason: "zero pooling factor",
            });
        }
        if i > 0 && s.in_channels != stages[i - 1].out_channels {
            return Err(ModelError::StageChain {
                index: i,
                expected: s.in_channels,
                got: stages[i - 1].out_channels,
            });
        }
    }
    Ok(())
}

/// The low-complexity student network.
#[derive(Debug, Clone)]
pub struct StudentNet {
    stages: Vec<StageSpec>,
    /// Per stage: weight `in x out`, bias `1 x out`.
    stage_params: Vec<(Matrix, Matrix)>,
    /// Head: weight `c_last x n_classes`, bias `1 x n_classes`.
    head_weight: Matrix,
    head_bias: Matrix,
    n_classes: usize,
}

/// Tape handles for one insertion of a student's parameters; every batch
/// shares a single set so gradients accumulate across clips.
pub struct NetVars {
    stage_params: Vec<(Var, Var)>,
    head_weight: Var,
    head_bias: Var,
}

impl NetVars {
    /// Parameter handles in the network's canonical order (stage weights and
    /// biases in stage order, then head weight and bias) — matches
    /// [`StudentNet::params_mut`].
    pub fn ordered(&self) -> Vec<Var> {
        let mut out = Vec::with_capacity(self.stage_params.len() * 2 + 2);
        for (w, b) in &self.stage_params {
            out.push(*w);
            out.push(*b);
        }
        out.push(self.head_weight);
        out.push(self.head_bias);
        out
    }
}

/// Tape nodes produced by one clip's forward pass.
pub struct StudentForward {
    /// 1 x n_classes logits.
    pub logits: Var,
    /// One pooled pre-activation feature map per stage.
    pub taps: Vec<Var>,
}

impl StudentNet {
    /// Initialize with U(-w, w) weights and biases, w = sqrt(1 / fan_in),
    /// drawn in canonical parameter order from a ChaCha8 stream.
    pub fn init(stages: &[StageSpec], n_classes: usize, seed: u64) -> Result<Self, ModelError> {
        validate_stages(stages, n_classes)?;
        let mut rng = seeded_rng(seed);
        let mut stage_params = Vec::with_capacity(stages.len());
        for s in stages {
            let w = (1.0 / s.in_channels as f64).sqrt();
            let weight = random_uniform(&mut rng, s.in_channels, s.out_channels, w);
            let bias = random_uniform(&mut rng, 1, s.out_channels, w);
            stage_params.push((weight, bias));
        }
        let c_last = stages.last().expect("non-empty").out_channels;
        let hw = (1.0 / c_last as f64).sqrt();
        let head_weight = random_uniform(&mut rng, c_last, n_classes, hw);
        let head_bias = random_uniform(&mut rng, 1, n_classes, hw);
        Ok(StudentNet {
            stages: stages.to_vec(),
            stage_params,
            head_weight,
            head_bias,
            n_classes,
        })
    }

    pub fn stages(&self) -> &[StageSpec] {
        &self.stages
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_channels(&self) -> usize {
        self.stages[0].in_channels
    }

    /// Parameters in canonical order, mutable (for optimizer updates).
    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::with_capacity(self.stage_params.len() * 2 + 2);
        for (w, b) in &mut self.stage_params {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.head_weight);
        out.push(&mut self.head_bias);
        out
    }

    /// Parameters in canonical order.
    pub fn params(&self) -> Vec<&Matrix> {
        let mut out = Vec::with_capacity(self.stage_params.len() * 2 + 2);
        for (w, b) in &self.stage_params {
            out.push(w);
            out.push(b);
        }
        out.push(&self.head_weight);
        out.push(&self.head_bias);
        out
    }

    /// Register the current parameter values as differentiable tape inputs.
    pub fn insert_params(&self, tape: &mut Tape) -> NetVars {
        let stage_params = self
            .stage_params
            .iter()
            .map(|(w, b)| (tape.input(w.clone()), tape.input(b.clone())))
            .collect();
        NetVars {
            stage_params,
            head_weight: tape.input(self.head_weight.clone()),
            head_bias: tape.input(self.head_bias.clone()),
        }
    }

    /// Forward pass of one clip (`frames x in_channels`) through previously
    /// inserted parameters. Returns logits and the per-stage taps.
    pub fn forward_on(
        &self,
        tape: &mut Tape,
        vars: &NetVars,
        input: &Matrix,
    ) -> Result<StudentForward, ModelError> {
        if input.cols() != self.input_channels() {
            return Err(ModelError::InputShape {
                expected_cols: self.input_channels(),
                got_cols: input.cols(),
            });
        }
        if input.rows() == 0 {
            return Err(ModelError::EmptyDataset);
        }
        let mut x = tape.constant(input.clone());
        let mut taps = Vec::with_capacity(self.stages.len());
        for (spec, (wv, bv)) in self.stages.iter().zip(&vars.stage_params) {
            let lin = tape.matmul(x, *wv)?;
            let lin = tape.add_row(lin, *bv)?;
            let tap = tape.pool_rows_mean(lin, spec.temporal_pool)?;
            taps.push(tap);
            x = tape.relu(tap);
        }
        let pooled = tape.mean_rows(x)?;
        let logits = tape.matmul(pooled, vars.head_weight)?;
        let logits = tape.add_row(logits, vars.head_bias)?;
        Ok(StudentForward { logits, taps })
    }

    /// Plain-value forward pass: per-class logits plus the per-stage taps.
    /// Uses the same kernels as the tape path, so values are bit-identical
    /// to training-time forwards for equal parameters and input.
    pub fn predict(&self, input: &Matrix) -> Result<(Vec<f64>, Vec<Matrix>), ModelError> {
        if input.cols() != self.input_channels() {
            return Err(ModelError::InputShape {
                expected_cols: self.input_channels(),
                got_cols: input.cols(),
            });
        }
        if input.rows() == 0 {
            return Err(ModelError::EmptyDataset);
        }
        let mut x = input.clone();
        let mut taps = Vec::with_capacity(self.stages.len());
        for (spec, (w, b)) in self.stages.iter().zip(&self.stage_params) {
            let tap = x.matmul(w)?.add_row(b)?.pool_rows_mean(spec.temporal_pool)?;
            x = tap.relu();
            taps.push(tap);
        }
        let logits = x.mean_rows()?.matmul(&self.head_weight)?.add_row(&self.head_bias)?;
        Ok((logits.row_slice(0).to_vec(), taps))
    }

    /// Number of parameters: per-stage `in*out + out`, plus the head
    /// (`c_last*K + K`) when `include_head` is set. The backbone-only count
    /// is what model-complexity comparisons quote.
    pub fn param_count(&self, include_head: bool) -> usize {
        let mut n = 0;
        for s in &self.stages {
            n += s.in_channels * s.out_channels + s.out_channels;
        }
        if include_head {
            let c_last = self.stages.last().expect("non-empty").out_channels;
            n += c_last * self.n_classes + self.n_classes;
        }
        n
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(&CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.push(KIND_STUDENT);
        buf.extend_from_slice(&(self.stages.len() as u32).to_le_bytes());
        for s in &self.stages {
            buf.extend_from_slice(&(s.in_channels as u32).to_le_bytes());
            buf.extend_from_slice(&(s.out_channels as u32).to_le_bytes());
            buf.extend_from_slice(&(s.temporal_pool as u32).to_le_bytes());
        }
        buf.extend_from_slice(&(self.n_classes as u32).to_le_bytes());
        for p in self.params() {
            for v in p.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }
}

/// Logistic regression on time-averaged teacher embeddings.
#[derive(Debug, Clone)]
pub struct TeacherLr {
    /// `embedding_dim x n_classes`.
    weight: Matrix,
    /// `1 x n_classes`.
    bias: Matrix,
}

impl TeacherLr {
    pub fn embedding_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.weight.cols()
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(&CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.push(KIND_TEACHER);
        buf.extend_from_slice(&(self.weight.rows() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.weight.cols() as u32).to_le_bytes());
        for v in self.weight.data().iter().chain(self.bias.data()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }
}

/// Either kind of model restored from a checkpoint file.
pub enum Checkpoint {
    Student(StudentNet),
    Teacher(TeacherLr),
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Checkpoint, ModelError> {
        let file = std::fs::File::open(path)?;
        let mut r = CountingReader::new(std::io::BufReader::new(file));

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(ModelError::CheckpointFormat {
                offset: 0,
                reason: format!("bad magic {magic:02x?}"),
            });
        }
        let version = r.read_u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::CheckpointVersion { found: version });
        }
        let kind = r.read_u8()?;
        match kind {
            KIND_STUDENT => Ok(Checkpoint::Student(load_student(&mut r)?)),
            KIND_TEACHER => Ok(Checkpoint::Teacher(load_teacher(&mut r)?)),
            other => Err(ModelError::CheckpointFormat {
                offset: r.offset() - 1,
                reason: format!("unknown model kind {other}"),
            }),
        }
    }
}

/// Upper bound on any dimension read from an untrusted header, to turn
/// corruption into an error instead of a huge allocation.
const MAX_DIM: u32 = 1 << 20;

fn read_dim<R: std::io::Read>(
    r: &mut CountingReader<R>,
    what: &str,
) -> Result<usize, ModelError> {
    let at = r.offset();
    let v = r.read_u32()?;
    if v == 0 || v > MAX_DIM {
        return Err(ModelError::CheckpointFormat {
            offset: at,
            reason: format!("implausible {what}: {v}"),
        });
    }
    Ok(v as usize)
}

fn read_matrix<R: std::io::Read>(
    r: &mut CountingReader<R>,
    rows: usize,
    cols: usize,
) -> Result<Matrix, ModelError> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(r.read_f64()?);
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

fn load_student<R: std::io::Read>(r: &mut CountingReader<R>) -> Result<StudentNet, ModelError> {
    let n_stages = read_dim(r, "stage count")?;
    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let in_c = read_dim(r, "stage input channels")?;
        let out_c = read_dim(r, "stage output channels")?;
        let pool = read_dim(r, "pooling factor")?;
        stages.push(StageSpec::new(in_c, out_c, pool));
    }
    let n_classes = read_dim(r, "class count")?;
    validate_stages(&stages, n_classes)?;
    let mut stage_params = Vec::with_capacity(n_stages);
    for s in &stages {
        let w = read_matrix(r, s.in_channels, s.out_channels)?;
        let b = read_matrix(r, 1, s.out_channels)?;
        stage_params.push((w, b));
    }
    let c_last = stages.last().expect("non-empty").out_channels;
    let head_weight = read_matrix(r, c_last, n_classes)?;
    let head_bias = read_matrix(r, 1, n_classes)?;
    expect_end(r)?;
    Ok(StudentNet {
        stages,
        stage_params,
        head_weight,
        head_bias,
        n_classes,
    })
}

fn load_teacher<R: std::io::Read>(r: &mut CountingReader<R>) -> Result<TeacherLr, ModelError> {
    let dim = read_dim(r, "embedding dim")?;
    let k = read_dim(r, "class count")?;
    let weight = read_matrix(r, dim, k)?;
    let bias = read_matrix(r, 1, k)?;
    expect_end(r)?;
    Ok(TeacherLr { weight, bias })
}

fn expect_end<R: std::io::Read>(r: &mut CountingReader<R>) -> Result<(), ModelError> {
    if r.has_more()? {
        return Err(ModelError::CheckpointFormat {
            offset: r.offset() - 1,
            reason: "trailing bytes after model payload".into(),
        });
    }
    Ok(())
}

/// Fit the logistic-regression teacher head on time-averaged embeddings
/// with full-batch gradient descent. Deterministic for a fixed seed.
pub fn teacher_fit(
    embeddings: &[Matrix],
    labels: &LabelBatch,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<TeacherLr, ModelError> {
    if embeddings.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(ModelError::BadHyper {
            name: "lr",
            value: lr,
        });
    }
    let dim = embeddings[0].cols();
    let n = embeddings.len();
    if labels.targets().rows() != n {
        return Err(ModelError::Numeric(NumericError::DimensionMismatch {
            op: "teacher_fit",
            left_rows: n,
            left_cols: dim,
            right_rows: labels.targets().rows(),
            right_cols: labels.targets().cols(),
        }));
    }
    let k = labels.targets().cols();

    // Collapse each embedding sequence to its time average.
    let mut x = Matrix::zeros(n, dim);
    for (i, e) in embeddings.iter().enumerate() {
        if e.cols() != dim || e.rows() == 0 {
            return Err(ModelError::InputShape {
                expected_cols: dim,
                got_cols: e.cols(),
            });
        }
        let mean = e.mean_rows()?;
        for c in 0..dim {
            x.set(i, c, mean.get(0, c));
        }
    }

    let mut rng = seeded_rng(seed);
    let hw = (1.0 / dim as f64).sqrt();
    let mut weight = random_uniform(&mut rng, dim, k, hw);
    let mut bias = random_uniform(&mut rng, 1, k, hw);

    for _ in 0..epochs {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let wv = tape.input(weight.clone());
        let bv = tape.input(bias.clone());
        let lin = tape.matmul(xv, wv)?;
        let logits = tape.add_row(lin, bv)?;
        let loss = masked_bce(&mut tape, logits, labels)?;
        let grads = tape.backward(loss)?;
        if let Some(g) = grads.wrt(wv) {
            weight = weight.sub(&g.scale(lr))?;
        }
        if let Some(g) = grads.wrt(bv) {
            bias = bias.sub(&g.scale(lr))?;
        }
    }
    Ok(TeacherLr { weight, bias })
}

/// Per-class logits of the teacher head for one embedding sequence
/// (time-averaged first).
pub fn teacher_predict_logits(model: &TeacherLr, embedding: &Matrix) -> Result<Vec<f64>, ModelError> {
    if embedding.cols() != model.embedding_dim() || embedding.rows() == 0 {
        return Err(ModelError::InputShape {
            expected_cols: model.embedding_dim(),
            got_cols: embedding.cols(),
        });
    }
    let logits = embedding
        .mean_rows()?
        .matmul(&model.weight)?
        .add_row(&model.bias)?;
    Ok(logits.row_slice(0).to_vec())
}

/// Forward-pass throughput of a student on one synthetic clip shape.
#[derive(Debug, Clone, Copy)]
pub struct Throughput {
    pub iterations: u64,
    pub seconds: f64,
    pub iterations_per_second: f64,
}

/// Measure forward passes per second on a `frames x in_channels` input of
/// fixed random content. Wall-clock based, so the rate is machine-dependent;
/// everything else in this crate stays deterministic.
pub fn throughput_bench(
    net: &StudentNet,
    frames: usize,
    min_seconds: f64,
) -> Result<Throughput, ModelError> {
    if !(min_seconds > 0.0 && min_seconds.is_finite()) {
        return Err(ModelError::BadHyper {
            name: "min_seconds",
            value: min_seconds,
        });
    }
    if frames == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let mut rng = seeded_rng(0xBE_EF);
    let input = random_uniform(&mut rng, frames, net.input_channels(), 1.0);
    // Warm up caches and branch predictors before timing.
    for _ in 0..3 {
        let _ = net.predict(&input)?;
    }
    let start = std::time::Instant::now();
    let mut iterations = 0u64;
    loop {
        let (logits, _) = net.predict(&input)?;
        std::hint::black_box(&logits);
        iterations += 1;
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed >= min_seconds {
            return Ok(Throughput {
                iterations,
                seconds: elapsed,
                iterations_per_second: iterations as f64 / elapsed,
            });
        }
    }
}

/// One architecture's entry in the complexity comparison.
#[derive(Debug, Clone)]
pub struct ComplexityRow {
    pub name: String,
    /// Backbone parameters only, so the figure is invariant to the number
    /// of classes the head predicts.
    pub backbone_params: usize,
    pub throughput: Throughput,
}

/// Render the complexity comparison as a TSV table. Parameters appear both
/// as a raw count (readable for small networks) and in millions, alongside
/// the measured forward rate.
pub fn complexity_report(rows: &[ComplexityRow]) -> String {
    let mut out = String::from("model\tparameters\tParameters (M)\titerations/s\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{:.2}\t{:.1}\n",
            r.name,
            r.backbone_params,
            r.backbone_params as f64 / 1e6,
            r.throughput.iterations_per_second
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_stage() -> Vec<StageSpec> {
        vec![StageSpec::new(8, 16, 2), StageSpec::new(16, 32, 2)]
    }

    #[test]
    fn init_validates_architecture() {
        assert!(matches!(
            StudentNet::init(&[], 4, 0),
            Err(ModelError::EmptyArchitecture)
        ));
        let broken = vec![StageSpec::new(8, 16, 2), StageSpec::new(12, 32, 2)];
        assert!(matches!(
            StudentNet::init(&broken, 4, 0),
            Err(ModelError::StageChain { index: 1, .. })
        ));
        assert!(matches!(
            StudentNet::init(&[StageSpec::new(8, 0, 1)], 4, 0),
            Err(ModelError::BadStage { .. })
        ));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = StudentNet::init(&two_stage(), 10, 7).unwrap();
        let b = StudentNet::init(&two_stage(), 10, 7).unwrap();
        let c = StudentNet::init(&two_stage(), 10, 8).unwrap();
        for (pa, pb) in a.params().iter().zip(b.params()) {
            assert_eq!(pa.data(), pb.data());
        }
        assert!(a
            .params()
            .iter()
            .zip(c.params())
            .any(|(pa, pc)| pa.data() != pc.data()));
    }

    #[test]
    fn param_count_hand_values() {
        // 8*16+16 = 144, 16*32+32 = 544 => 688; head 32*10+10 = 330.
        let net = StudentNet::init(&two_stage(), 10, 0).unwrap();
        assert_eq!(net.param_count(false), 688);
        assert_eq!(net.param_count(true), 1018);
    }

    #[test]
    fn forward_shapes_and_tap_layout() {
        let net = StudentNet::init(&two_stage(), 10, 1).unwrap();
        let mut rng = seeded_rng(2);
        let input = random_uniform(&mut rng, 8, 8, 1.0);
        let (logits, taps) = net.predict(&input).unwrap();
        assert_eq!(logits.len(), 10);
        assert_eq!(taps.len(), 2);
        // 8 frames -> pool 2 -> 4 -> pool 2 -> 2.
        assert_eq!((taps[0].rows(), taps[0].cols()), (4, 16));
        assert_eq!((taps[1].rows(), taps[1].cols()), (2, 32));
        assert!(matches!(
            net.predict(&random_uniform(&mut rng, 8, 5, 1.0)),
            Err(ModelError::InputShape { .. })
        ));
    }

    #[test]
    fn tape_forward_matches_plain_predict_bitwise() {
        let net = StudentNet::init(&two_stage(), 6, 3).unwrap();
        let mut rng = seeded_rng(4);
        let input = random_uniform(&mut rng, 7, 8, 1.0);
        let (plain_logits, plain_taps) = net.predict(&input).unwrap();

        let mut tape = Tape::new();
        let vars = net.insert_params(&mut tape);
        let fwd = net.forward_on(&mut tape, &vars, &input).unwrap();
        assert_eq!(tape.value(fwd.logits).row_slice(0), &plain_logits[..]);
        for (tap, plain) in fwd.taps.iter().zip(&plain_taps) {
            assert_eq!(tape.value(*tap).data(), plain.data());
        }
    }

    #[test]
    fn student_checkpoint_round_trips_exact_bits() {
        let net = StudentNet::init(&two_stage(), 10, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("student.ckpt");
        net.save(&path).unwrap();
        let Checkpoint::Student(back) = Checkpoint::load(&path).unwrap() else {
            panic!("expected student checkpoint");
        };
        assert_eq!(back.stages(), net.stages());
        for (a, b) in net.params().iter().zip(back.params()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn checkpoint_rejects_corruption_and_versions() {
        let net = StudentNet::init(&two_stage(), 10, 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("student.ckpt");
        net.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // Bad magic.
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(ModelError::CheckpointFormat { offset: 0, .. })
        ));

        // Unsupported version.
        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&9u32.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(ModelError::CheckpointVersion { found: 9 })
        ));

        // Truncation points at the end of what's left.
        let cut = bytes.len() - 11;
        std::fs::write(&path, &bytes[..cut]).unwrap();
        match Checkpoint::load(&path) {
            Err(ModelError::CheckpointFormat { offset, .. }) => {
                assert!(offset as usize <= cut);
            }
            other => panic!("expected format error, got {:?}", other.is_ok()),
        }

        // Trailing garbage.
        let mut bad = bytes.clone();
        bad.push(0);
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            Checkpoint::load(&path),
            Err(ModelError::CheckpointFormat { .. })
        ));
    }

    #[test]
    fn teacher_fit_learns_separable_problem() {
        // Labels decided by the sign of one embedding coordinate: logistic
        // regression must fit this nearly perfectly.
        let mut rng = seeded_rng(9);
        let n = 60;
        let embeddings: Vec<Matrix> = (0..n).map(|_| random_normal(&mut rng, 1, 4)).collect();
        let mut targets = Matrix::zeros(n, 2);
        for (i, e) in embeddings.iter().enumerate() {
            targets.set(i, 0, if e.get(0, 0) > 0.0 { 1.0 } else { 0.0 });
            targets.set(i, 1, if e.get(0, 2) > 0.0 { 1.0 } else { 0.0 });
        }
        let labels = LabelBatch::dense(targets.clone()).unwrap();
        let model = teacher_fit(&embeddings, &labels, DEFAULT_TEACHER_EPOCHS, DEFAULT_TEACHER_LR, 0).unwrap();
        let mut correct = 0;
        for (i, e) in embeddings.iter().enumerate() {
            let logits = teacher_predict_logits(&model, e).unwrap();
            for (k, &z) in logits.iter().enumerate() {
                let pred = if z > 0.0 { 1.0 } else { 0.0 };
                if pred == targets.get(i, k) {
                    correct += 1;
                }
            }
        }
        let acc = correct as f64 / (n * 2) as f64;
        assert!(acc > 0.95, "teacher accuracy {acc} too low");
    }

    #[test]
    fn teacher_fit_duplicating_every_sample_changes_nothing_materially() {
        // Full-batch gradients are means, so duplicating the dataset leaves
        // the optimization path nearly unchanged.
        let mut rng = seeded_rng(10);
        let embeddings: Vec<Matrix> = (0..20).map(|_| random_normal(&mut rng, 1, 3)).collect();
        let mut targets = Matrix::zeros(20, 2);
        for (i, e) in embeddings.iter().enumerate() {
            targets.set(i, 0, if e.get(0, 0) > 0.0 { 1.0 } else { 0.0 });
            targets.set(i, 1, if e.get(0, 1) + e.get(0, 2) > 0.0 { 1.0 } else { 0.0 });
        }
        let labels = LabelBatch::dense(targets.clone()).unwrap();

        let doubled: Vec<Matrix> = embeddings.iter().chain(&embeddings).cloned().collect();
        let stacked = Matrix::vstack(&[&targets, &targets]).unwrap();
        let labels2 = LabelBatch::dense(stacked).unwrap();

        let m1 = teacher_fit(&embeddings, &labels, 200, 0.1, 5).unwrap();
        let m2 = teacher_fit(&doubled, &labels2, 200, 0.1, 5).unwrap();
        for (a, b) in m1.weight.data().iter().zip(m2.weight.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        for (a, b) in m1.bias.data().iter().zip(m2.bias.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn teacher_checkpoint_round_trip() {
        let mut rng = seeded_rng(11);
        let embeddings: Vec<Matrix> = (0..10).map(|_| random_normal(&mut rng, 2, 3)).collect();
        let mut targets = Matrix::zeros(10, 2);
        for i in 0..10 {
            targets.set(i, 0, (i % 2) as f64);
            targets.set(i, 1, ((i / 2) % 2) as f64);
        }
        let labels = LabelBatch::dense(targets).unwrap();
        let model = teacher_fit(&embeddings, &labels, 50, 0.1, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("teacher.ckpt");
        model.save(&path).unwrap();
        let Checkpoint::Teacher(back) = Checkpoint::load(&path).unwrap() else {
            panic!("expected teacher checkpoint");
        };
        assert_eq!(back.weight.data(), model.weight.data());
        assert_eq!(back.bias.data(), model.bias.data());
    }

    #[test]
    fn teacher_fit_propagates_empty_mask() {
        let embeddings = vec![Matrix::scalar(1.0), Matrix::scalar(2.0)];
        let labels = LabelBatch::new(Matrix::zeros(2, 1), Matrix::zeros(2, 1)).unwrap();
        assert!(matches!(
            teacher_fit(&embeddings, &labels, 10, 0.1, 0),
            Err(ModelError::Loss(LossError::EmptyMask))
        ));
    }

    #[test]
    fn orthonormal_rows_are_orthonormal() {
        let mut rng = seeded_rng(12);
        let q = random_orthonormal_rows(&mut rng, 3, 5).unwrap();
        let gram = q.matmul(&q.transpose()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram.get(i, j), expected, epsilon = 1e-12);
            }
        }
        assert!(random_orthonormal_rows(&mut rng, 5, 3).is_err());
    }

    #[test]
    fn throughput_bench_reports_positive_rate() {
        let net = StudentNet::init(&two_stage(), 4, 0).unwrap();
        let t = throughput_bench(&net, 8, 0.05).unwrap();
        assert!(t.iterations_per_second > 0.0);
        assert!(t.iterations >= 1);
        assert!(throughput_bench(&net, 8, 0.0).is_err());
    }

    #[test]
    fn complexity_report_lists_both_columns() {
        let rows = vec![ComplexityRow {
            name: "two-stage".into(),
            backbone_params: 688,
            throughput: Throughput {
                iterations: 100,
                seconds: 0.5,
                iterations_per_second: 200.0,
            },
        }];
        let report = complexity_report(&rows);
        let mut lines = report.lines();
        assert_eq!(
            lines.next(),
            Some("model\tparameters\tParameters (M)\titerations/s")
        );
        assert_eq!(lines.next(), Some("two-stage\t688\t0.00\t200.0"));
    }
}
