//! Feature-space distance measures between student feature maps and teacher
//! embedding sequences, differentiable on the student side only.
//!
//! Two measures are provided:
//!
//! * **Cosine-distance difference** — for every unordered sample pair in the
//!   batch, the absolute difference between the student-space and
//!   teacher-space cosine distances, averaged over pairs and time frames.
//! * **Distance correlation** — one minus the sample distance correlation
//!   between the student and teacher point sets at each frame, averaged over
//!   frames. Pairwise Euclidean distances are double-centered; the squared
//!   distance covariance is the mean elementwise product of the centered
//!   matrices, and the correlation normalizes by the two self-covariances.
//!   The loss is invariant to translation, positive rescaling, and
//!   orthogonal transforms of either side, and zero exactly when the two
//!   point sets are similar in that sense.
//!
//! Sequences of different lengths are aligned first by stretching the
//! shorter one with a nearest-neighbor index map, so a single global teacher
//! embedding can supervise every student frame.

use crate::autodiff::{Tape, Var};
use crate::linalg::{Matrix, NumericError, DIST_SMOOTH_EPS};
use thiserror::Error;

/// Feature vectors with a 2-norm below this are rejected before any cosine
/// is formed; the direction of a near-zero vector is numerically meaningless.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// A squared distance covariance below this means all samples on that side
/// coincide and the correlation is undefined.
pub const DEGENERATE_EPS: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("batch holds {got} sequence pairs; at least {min} are required")]
    BatchTooSmall { got: usize, min: usize },
    #[error("sequence {index} is {got_rows}x{got_cols} but the batch established {expected_rows}x{expected_cols}")]
    RaggedBatch {
        index: usize,
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("zero-norm feature vector at sample {sample}, frame {frame}")]
    ZeroVector { sample: usize, frame: usize },
    #[error("degenerate batch at frame {frame}: {side} samples all coincide")]
    DegenerateBatch { frame: usize, side: &'static str },
    #[error("sequence has no frames or no channels")]
    EmptySequence,
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Which feature-space measure a system regularizes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// Mean absolute difference of pairwise cosine distances.
    CosDiff,
    /// One minus distance correlation.
    DistanceCorrelation,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::CosDiff => "cos-diff",
            MeasureKind::DistanceCorrelation => "dcor",
        }
    }

    pub fn parse(s: &str) -> Option<MeasureKind> {
        match s {
            "cos-diff" | "cosdiff" => Some(MeasureKind::CosDiff),
            "dcor" | "distance-correlation" => Some(MeasureKind::DistanceCorrelation),
            _ => None,
        }
    }
}

/// Nearest-neighbor index map that stretches a length-`t_short` sequence to
/// `t_long` frames: frame `i` of the stretched sequence reads source frame
/// `floor(i * t_short / t_long)`.
pub fn stretch_indices(t_short: usize, t_long: usize) -> Vec<usize> {
    debug_assert!(t_short >= 1 && t_long >= t_short);
    (0..t_long).map(|i| i * t_short / t_long).collect()
}

/// Align a student/teacher sequence pair to a common length
/// `T = max(T_student, T_teacher)` by stretching the shorter sequence.
pub fn align_time(student: &Matrix, teacher: &Matrix) -> Result<(Matrix, Matrix), MeasureError> {
    if student.rows() == 0 || student.cols() == 0 || teacher.rows() == 0 || teacher.cols() == 0 {
        return Err(MeasureError::EmptySequence);
    }
    let t = student.rows().max(teacher.rows());
    let s = if student.rows() == t {
        student.clone()
    } else {
        student.gather_rows(&stretch_indices(student.rows(), t))?
    };
    let v = if teacher.rows() == t {
        teacher.clone()
    } else {
        teacher.gather_rows(&stretch_indices(teacher.rows(), t))?
    };
    Ok((s, v))
}

/// Cosine distance `1 - u.w / (|u| |w|)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], w: &[f64]) -> Result<f64, MeasureError> {
    if u.len() != w.len() || u.is_empty() {
        return Err(MeasureError::Numeric(NumericError::DimensionMismatch {
            op: "cosine_distance",
            left_rows: 1,
            left_cols: u.len(),
            right_rows: 1,
            right_cols: w.len(),
        }));
    }
    let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu < ZERO_NORM_EPS || nw < ZERO_NORM_EPS {
        return Err(MeasureError::ZeroVector {
            sample: 0,
            frame: 0,
        });
    }
    Ok(1.0 - dot / (nu * nw))
}

/// A batch of aligned sequence pairs living partly on a tape: student
/// feature maps are differentiable nodes, teacher sequences are plain
/// values. All sequences share one frame count.
pub struct AlignedVarBatch {
    student: Vec<Var>,
    teacher: Vec<Matrix>,
    frames: usize,
}

impl AlignedVarBatch {
    pub fn new(tape: &Tape, student: Vec<Var>, teacher: Vec<Matrix>) -> Result<Self, MeasureError> {
        if student.len() != teacher.len() || student.len() < 2 {
            return Err(MeasureError::BatchTooSmall {
                got: student.len().min(teacher.len()),
                min: 2,
            });
        }
        let (t, cs) = {
            let first = tape.value(student[0]);
            (first.rows(), first.cols())
        };
        if t == 0 || cs == 0 {
            return Err(MeasureError::EmptySequence);
        }
        for (i, s) in student.iter().enumerate() {
            let m = tape.value(*s);
            if m.rows() != t || m.cols() != cs {
                return Err(MeasureError::RaggedBatch {
                    index: i,
                    expected_rows: t,
                    expected_cols: cs,
                    got_rows: m.rows(),
                    got_cols: m.cols(),
                });
            }
        }
        let ct = teacher[0].cols();
        if ct == 0 {
            return Err(MeasureError::EmptySequence);
        }
        for (i, v) in teacher.iter().enumerate() {
            if v.rows() != t || v.cols() != ct {
                return Err(MeasureError::RaggedBatch {
                    index: i,
                    expected_rows: t,
                    expected_cols: ct,
                    got_rows: v.rows(),
                    got_cols: v.cols(),
                });
            }
        }
        Ok(AlignedVarBatch {
            student,
            teacher,
            frames: t,
        })
    }

    pub fn len(&self) -> usize {
        self.student.len()
    }

    pub fn is_empty(&self) -> bool {
        self.student.is_empty()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }
}

/// Plain-value twin of [`AlignedVarBatch`] for evaluation and tests.
pub struct AlignedBatch {
    pub student: Vec<Matrix>,
    pub teacher: Vec<Matrix>,
}

impl AlignedBatch {
    /// Validates by round-tripping through a throwaway tape.
    pub fn new(student: Vec<Matrix>, teacher: Vec<Matrix>) -> Result<Self, MeasureError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = student.iter().map(|m| tape.constant(m.clone())).collect();
        AlignedVarBatch::new(&tape, vars, teacher.clone())?;
        Ok(AlignedBatch { student, teacher })
    }
}

/// Stack all student maps and return one gathered n x C matrix per frame:
/// row i of frame t is sample i's feature vector at frame t.
fn frame_views(tape: &mut Tape, batch: &AlignedVarBatch) -> Result<Vec<Var>, MeasureError> {
    let t_frames = batch.frames;
    let stacked = tape.vstack(&batch.student)?;
    let mut views = Vec::with_capacity(t_frames);
    for t in 0..t_frames {
        let idx: Vec<usize> = (0..batch.student.len()).map(|i| i * t_frames + t).collect();
        views.push(tape.gather_rows(stacked, &idx)?);
    }
    Ok(views)
}

/// Teacher feature vectors at frame `t`, one row per sample.
fn teacher_frame(batch: &AlignedVarBatch, t: usize) -> Matrix {
    let n = batch.teacher.len();
    let c = batch.teacher[0].cols();
    let mut out = Matrix::zeros(n, c);
    for (i, seq) in batch.teacher.iter().enumerate() {
        for j in 0..c {
            out.set(i, j, seq.get(t, j));
        }
    }
    out
}

/// Pairwise cosine-similarity matrix of the rows of `x`, using the same
/// kernel sequence as the tape path (gram, diagonal, sqrt, outer, divide) so
/// identical inputs on the two paths produce bit-identical similarity
/// matrices. Rejects rows with near-zero norm.
fn cosine_matrix(x: &Matrix, frame: usize) -> Result<Matrix, MeasureError> {
    let gram = x.matmul(&x.transpose())?;
    let diag = gram.diag_part()?;
    for i in 0..diag.rows() {
        if diag.get(i, 0) < ZERO_NORM_EPS * ZERO_NORM_EPS {
            return Err(MeasureError::ZeroVector { sample: i, frame });
        }
    }
    let norms = diag.sqrt_strict()?;
    let outer = norms.matmul(&norms.transpose())?;
    Ok(gram.div(&outer)?)
}

/// 0/1 mask that zeroes the diagonal of an n x n matrix.
fn off_diagonal_mask(n: usize) -> Matrix {
    let mut m = Matrix::from_vec(n, n, vec![1.0; n * n]).expect("square fill");
    for i in 0..n {
        m.set(i, i, 0.0);
    }
    m
}

/// Cosine-distance-difference loss over an aligned batch.
///
/// For each frame, every sample pair contributes
/// `|d_cos(student_i, student_j) - d_cos(teacher_i, teacher_j)|`; pairs are
/// averaged, then frames. The result is in `[0, 2]` and exactly zero when
/// both sides have identical pairwise cosine structure.
pub fn cos_diff_loss(tape: &mut Tape, batch: &AlignedVarBatch) -> Result<Var, MeasureError> {
    let n = batch.len();
    let frames = frame_views(tape, batch)?;
    let mask = off_diagonal_mask(n);
    let pair_scale = 1.0 / (n * (n - 1)) as f64;

    let mut total: Option<Var> = None;
    for (t, &f) in frames.iter().enumerate() {
        // Teacher cosine similarities are constants; gradients only reach
        // the student side.
        let vt = teacher_frame(batch, t);
        let cos_teacher = cosine_matrix(&vt, t)?;

        let ft = tape.transpose(f);
        let gram = tape.matmul(f, ft)?;
        let diag = tape.diag_part(gram)?;
        for i in 0..n {
            if tape.value(diag).get(i, 0) < ZERO_NORM_EPS * ZERO_NORM_EPS {
                return Err(MeasureError::ZeroVector { sample: i, frame: t });
            }
        }
        let norms = tape.sqrt(diag)?;
        let norms_t = tape.transpose(norms);
        let outer = tape.matmul(norms, norms_t)?;
        let cos_student = tape.div(gram, outer)?;

        // d_student - d_teacher == cos_teacher - cos_student.
        let ct = tape.constant(cos_teacher);
        let diff = tape.sub(ct, cos_student)?;
        let adiff = tape.abs(diff);
        let mv = tape.constant(mask.clone());
        let off = tape.mul(adiff, mv)?;
        let s = tape.sum(off);
        let frame_loss = tape.scale(s, pair_scale);
        total = Some(match total {
            Some(acc) => tape.add(acc, frame_loss)?,
            None => frame_loss,
        });
    }
    Ok(tape.scale(total.expect("frames >= 1"), 1.0 / batch.frames as f64))
}

/// Check one side of a frame for collapse: the distance-variance term `V^2`
/// computed from raw, unsmoothed pairwise distances falls below
/// [`DEGENERATE_EPS`]. Raw distances make the test exact -- a side whose rows
/// all coincide yields an all-zero distance matrix and `V^2 = 0` -- whereas
/// the smoothing floor used by the loss itself would hide the collapse behind
/// an `O(sqrt(eps))` artifact.
fn side_is_collapsed(points: &Matrix, inv_n2: f64) -> Result<bool, MeasureError> {
    let a = points.pairwise_euclidean().double_center()?;
    Ok(a.frob_dot(&a)? * inv_n2 < DEGENERATE_EPS)
}

/// Distance-correlation loss over an aligned batch: `1 - R^2` per frame,
/// averaged over frames, where `R^2` is the squared sample distance
/// correlation between the student and teacher point sets.
///
/// Distances are smoothed as `sqrt(sum d^2 + DIST_SMOOTH_EPS)` so the
/// gradient exists at coincident rows; the naive oracle uses the same
/// definition. The collapse check runs on unsmoothed distances so it fires
/// exactly when a side's rows are (numerically) identical.
pub fn dcor_loss(tape: &mut Tape, batch: &AlignedVarBatch) -> Result<Var, MeasureError> {
    let n = batch.len();
    if n == 2 {
        // With two samples the centered distance matrices are fully
        // determined by one scalar, so R^2 is identically 1 and the loss
        // carries no signal.
        log::warn!("distance correlation over a batch of 2 is degenerate (loss is identically 0)");
    }
    let inv_n2 = 1.0 / (n * n) as f64;
    let frames = frame_views(tape, batch)?;
    let one = tape.scalar_constant(1.0);

    let mut total: Option<Var> = None;
    for (t, &f) in frames.iter().enumerate() {
        let vt = teacher_frame(batch, t);
        if side_is_collapsed(&vt, inv_n2)? {
            return Err(MeasureError::DegenerateBatch {
                frame: t,
                side: "teacher",
            });
        }
        let b = vt
            .pairwise_euclidean_with(DIST_SMOOTH_EPS)
            .double_center()?;
        let v_teacher = b.frob_dot(&b)? * inv_n2;

        if side_is_collapsed(tape.value(f), inv_n2)? {
            return Err(MeasureError::DegenerateBatch {
                frame: t,
                side: "student",
            });
        }
        let dist = tape.pairwise_euclidean(f);
        let a = tape.double_center(dist)?;
        let aa = tape.mul(a, a)?;
        let saa = tape.sum(aa);
        let v_student = tape.scale(saa, inv_n2);

        let bc = tape.constant(b);
        let ab = tape.mul(a, bc)?;
        let sab = tape.sum(ab);
        let v_cross = tape.scale(sab, inv_n2);

        let prod = tape.scale(v_student, v_teacher);
        let denom = tape.sqrt(prod)?;
        let r2 = tape.div(v_cross, denom)?;
        let frame_loss = tape.sub(one, r2)?;
        total = Some(match total {
            Some(acc) => tape.add(acc, frame_loss)?,
            None => frame_loss,
        });
    }
    Ok(tape.scale(total.expect("frames >= 1"), 1.0 / batch.frames as f64))
}

/// Align a batch of per-stage student maps against teacher sequences and
/// apply the chosen measure. Student maps keep their gradients through the
/// alignment (repeated frames scatter-add); teachers are constants.
pub fn regularization_loss(
    tape: &mut Tape,
    measure: MeasureKind,
    student_maps: &[Var],
    teacher_seqs: &[Matrix],
) -> Result<Var, MeasureError> {
    if student_maps.len() != teacher_seqs.len() || student_maps.len() < 2 {
        return Err(MeasureError::BatchTooSmall {
            got: student_maps.len().min(teacher_seqs.len()),
            min: 2,
        });
    }
    let (t_s, c_s) = {
        let first = tape.value(student_maps[0]);
        (first.rows(), first.cols())
    };
    let (t_t, c_t) = (teacher_seqs[0].rows(), teacher_seqs[0].cols());
    if t_s == 0 || c_s == 0 || t_t == 0 || c_t == 0 {
        return Err(MeasureError::EmptySequence);
    }
    for (i, s) in student_maps.iter().enumerate() {
        let m = tape.value(*s);
        if m.rows() != t_s || m.cols() != c_s {
            return Err(MeasureError::RaggedBatch {
                index: i,
                expected_rows: t_s,
                expected_cols: c_s,
                got_rows: m.rows(),
                got_cols: m.cols(),
            });
        }
    }
    for (i, v) in teacher_seqs.iter().enumerate() {
        if v.rows() != t_t || v.cols() != c_t {
            return Err(MeasureError::RaggedBatch {
                index: i,
                expected_rows: t_t,
                expected_cols: c_t,
                got_rows: v.rows(),
                got_cols: v.cols(),
            });
        }
    }

    let t = t_s.max(t_t);
    let mut aligned_students = Vec::with_capacity(student_maps.len());
    if t_s == t {
        aligned_students.extend_from_slice(student_maps);
    } else {
        let idx = stretch_indices(t_s, t);
        for &s in student_maps {
            aligned_students.push(tape.gather_rows(s, &idx)?);
        }
    }
    let mut aligned_teachers = Vec::with_capacity(teacher_seqs.len());
    if t_t == t {
        aligned_teachers.extend(teacher_seqs.iter().cloned());
    } else {
        let idx = stretch_indices(t_t, t);
        for v in teacher_seqs {
            aligned_teachers.push(v.gather_rows(&idx)?);
        }
    }

    let batch = AlignedVarBatch::new(tape, aligned_students, aligned_teachers)?;
    match measure {
        MeasureKind::CosDiff => cos_diff_loss(tape, &batch),
        MeasureKind::DistanceCorrelation => dcor_loss(tape, &batch),
    }
}

/// Value-only cosine-distance-difference loss.
pub fn cos_diff_loss_value(batch: &AlignedBatch) -> Result<f64, MeasureError> {
    measure_value(MeasureKind::CosDiff, batch)
}

/// Value-only distance-correlation loss.
pub fn dcor_loss_value(batch: &AlignedBatch) -> Result<f64, MeasureError> {
    measure_value(MeasureKind::DistanceCorrelation, batch)
}

fn measure_value(measure: MeasureKind, batch: &AlignedBatch) -> Result<f64, MeasureError> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = batch
        .student
        .iter()
        .map(|m| tape.constant(m.clone()))
        .collect();
    let vb = AlignedVarBatch::new(&tape, vars, batch.teacher.clone())?;
    let loss = match measure {
        MeasureKind::CosDiff => cos_diff_loss(&mut tape, &vb)?,
        MeasureKind::DistanceCorrelation => dcor_loss(&mut tape, &vb)?,
    };
    Ok(tape.scalar_value(loss))
}
