//! Synthetic labeled-clip datasets with controllable teacher quality,
//! deterministic splits (including nested limited-data subsets), and the
//! binary container format.
//!
//! The generative story mirrors the audio-tagging setting at desk scale: a
//! latent vector `z` plays the role of a clip's semantic content. Class
//! labels are half-space indicators of `z`; input frames are a fixed noisy
//! linear view of `z`; the teacher embedding is a clean (or noise-corrupted)
//! orthonormal projection of `z`, one global vector per clip — exactly the
//! shape of pre-computed clip-level embeddings. A small `teacher_noise`
//! yields a strong teacher, a large one a weak teacher.
//!
//! All frame and teacher values are quantized through `f32` at generation
//! time, because that is the container's at-rest precision; a generated
//! dataset therefore round-trips the container bit-exactly.

use crate::byteio::{ByteIoError, CountingReader};
use crate::linalg::{Matrix, NumericError};
use crate::models::{random_normal, random_orthonormal_rows, seeded_rng};
use rand::seq::SliceRandom;
use rand::Rng;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Container file magic bytes (format "EAST1" = magic + version 1).
pub const CONTAINER_MAGIC: [u8; 4] = *b"EAST";
/// Current container format version; readers reject anything else.
pub const CONTAINER_VERSION: u32 = 1;

/// Standard deviation of the per-frame observation noise added to the
/// latent's linear image. Fixed: the knob for problem difficulty is the
/// teacher side, not the inputs.
pub const FRAME_NOISE: f64 = 0.3;

/// Upper bound on any dimension read from a container header; corruption
/// becomes an error instead of a huge allocation.
const MAX_DIM: u32 = 1 << 24;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid generation config: {reason}")]
    InvalidConfig { reason: String },
    #[error("split would leave the {which} partition empty")]
    EmptySplit { which: &'static str },
    #[error("container malformed at byte {offset}: {reason}")]
    FormatError { offset: u64, reason: String },
    #[error("container version {found} is not supported (expected {CONTAINER_VERSION})")]
    VersionMismatch { found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl From<ByteIoError> for DataError {
    fn from(e: ByteIoError) -> Self {
        match e {
            ByteIoError::Eof { offset } => DataError::FormatError {
                offset,
                reason: "unexpected end of file".into(),
            },
            ByteIoError::Io(e) => DataError::Io(e),
        }
    }
}

/// One labeled clip: input frames plus per-class targets and observation
/// mask (multi-label with missing labels).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub clip_id: u32,
    /// `frames x input_channels`.
    pub frames: Matrix,
    /// K entries in {0, 1}.
    pub targets: Vec<u8>,
    /// K entries in {0, 1}; 0 marks an unobserved label.
    pub mask: Vec<u8>,
}

/// Clips paired with their teacher embedding sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub clips: Vec<LabeledClip>,
    /// One `T_t x teacher_channels` sequence per clip, parallel to `clips`.
    pub teachers: Vec<Matrix>,
    pub n_classes: usize,
    pub input_channels: usize,
    pub teacher_channels: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// Subset by clip indices (clones the selected clips).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            clips: indices.iter().map(|&i| self.clips[i].clone()).collect(),
            teachers: indices.iter().map(|&i| self.teachers[i].clone()).collect(),
            n_classes: self.n_classes,
            input_channels: self.input_channels,
            teacher_channels: self.teacher_channels,
        }
    }

    /// Stacked n x K target and mask matrices for loss construction.
    pub fn label_matrices(&self) -> (Matrix, Matrix) {
        let n = self.clips.len();
        let k = self.n_classes;
        let mut targets = Matrix::zeros(n, k);
        let mut mask = Matrix::zeros(n, k);
        for (i, clip) in self.clips.iter().enumerate() {
            for c in 0..k {
                targets.set(i, c, clip.targets[c] as f64);
                mask.set(i, c, clip.mask[c] as f64);
            }
        }
        (targets, mask)
    }
}

/// Configuration of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_clips: usize,
    pub n_classes: usize,
    /// Latent dimension d of the clip-content vector.
    pub latent_dim: usize,
    /// Frames per clip.
    pub frames: usize,
    /// Input channels per frame.
    pub input_channels: usize,
    /// Teacher embedding dimension; at most `latent_dim` so the projection
    /// can have orthonormal rows.
    pub teacher_channels: usize,
    /// Standard deviation of teacher corruption; 0 = strong teacher.
    pub teacher_noise: f64,
    /// Probability that a (clip, class) label is observed.
    pub mask_observe_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// The strong-teacher benchmark configuration: 2800 clips splitting
    /// 5/7 : 1/7 : 1/7 into 2000/400/400.
    fn default() -> Self {
        SynthConfig {
            n_clips: 2800,
            n_classes: 10,
            latent_dim: 16,
            frames: 8,
            input_channels: 24,
            teacher_channels: 16,
            teacher_noise: 0.0,
            mask_observe_prob: 0.9,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), DataError> {
        let fail = |reason: &str| {
            Err(DataError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.n_clips == 0 {
            return fail("n_clips must be at least 1");
        }
        if self.n_classes == 0 || self.latent_dim == 0 || self.frames == 0 {
            return fail("n_classes, latent_dim and frames must be at least 1");
        }
        if self.input_channels == 0 || self.teacher_channels == 0 {
            return fail("channel counts must be at least 1");
        }
        if self.teacher_channels > self.latent_dim {
            return fail("teacher_channels cannot exceed latent_dim (orthonormal projection)");
        }
        if !(self.teacher_noise >= 0.0 && self.teacher_noise.is_finite()) {
            return fail("teacher_noise must be finite and non-negative");
        }
        if !(self.mask_observe_prob > 0.0 && self.mask_observe_prob <= 1.0) {
            return fail("mask_observe_prob must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Round every entry through `f32`, the container's at-rest precision.
fn quantize_f32(m: Matrix) -> Matrix {
    m.map(|v| v as f32 as f64)
}

/// Generate a synthetic dataset. Deterministic: one ChaCha8 stream seeded
/// from `config.seed` drives every draw in a fixed order (class directions,
/// input projection, teacher projection, then per clip: latent, frame
/// noise, teacher noise, mask). Noise is drawn even at zero amplitude so
/// datasets differing only in `teacher_noise` share latents and masks.
pub fn generate(config: &SynthConfig) -> Result<Dataset, DataError> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let d = config.latent_dim;

    // Fixed random structure of the task.
    let directions = random_normal(&mut rng, config.n_classes, d);
    let input_proj = random_normal(&mut rng, config.input_channels, d).scale(1.0 / (d as f64).sqrt());
    let teacher_proj = random_orthonormal_rows(&mut rng, config.teacher_channels, d)?;

    let mut clips = Vec::with_capacity(config.n_clips);
    let mut teachers = Vec::with_capacity(config.n_clips);
    for clip_id in 0..config.n_clips {
        let z = random_normal(&mut rng, d, 1);

        let mut targets = Vec::with_capacity(config.n_classes);
        for k in 0..config.n_classes {
            let dot: f64 = (0..d).map(|c| directions.get(k, c) * z.get(c, 0)).sum();
            targets.push(u8::from(dot > 0.0));
        }

        let clean = input_proj.matmul(&z)?; // C_in x 1
        let noise = random_normal(&mut rng, config.frames, config.input_channels);
        let mut frames = Matrix::zeros(config.frames, config.input_channels);
        for t in 0..config.frames {
            for c in 0..config.input_channels {
                frames.set(t, c, clean.get(c, 0) + FRAME_NOISE * noise.get(t, c));
            }
        }

        let teacher_clean = teacher_proj.matmul(&z)?; // C_t x 1
        let teacher_noise = random_normal(&mut rng, config.teacher_channels, 1);
        let mut teacher = Matrix::zeros(1, config.teacher_channels);
        for c in 0..config.teacher_channels {
            teacher.set(
                0,
                c,
                teacher_clean.get(c, 0) + config.teacher_noise * teacher_noise.get(c, 0),
            );
        }

        let mask: Vec<u8> = (0..config.n_classes)
            .map(|_| u8::from(rng.random::<f64>() < config.mask_observe_prob))
            .collect();

        clips.push(LabeledClip {
            clip_id: clip_id as u32,
            frames: quantize_f32(frames),
            targets,
            mask,
        });
        teachers.push(quantize_f32(teacher));
    }

    Ok(Dataset {
        clips,
        teachers,
        n_classes: config.n_classes,
        input_channels: config.input_channels,
        teacher_channels: config.teacher_channels,
    })
}

/// How to split a dataset into train/val/test, with an optional limit on
/// the training partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    /// Fraction of the train partition to keep (nested prefix subsets of
    /// one shuffle; the canonical grid is {0.25, 0.5, 0.75, 1.0}).
    pub limit_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.7,
            val_frac: 0.15,
            test_frac: 0.15,
            limit_fraction: 1.0,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_limit(mut self, limit_fraction: f64) -> Self {
        self.limit_fraction = limit_fraction;
        self
    }

    fn validate(&self) -> Result<(), DataError> {
        let fail = |reason: &str| {
            Err(DataError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        for (name, f) in [
            ("train_frac", self.train_frac),
            ("val_frac", self.val_frac),
            ("test_frac", self.test_frac),
        ] {
            if !(f >= 0.0 && f <= 1.0) {
                return fail(&format!("{name} must lie in [0, 1]"));
            }
        }
        if (self.train_frac + self.val_frac + self.test_frac - 1.0).abs() > 1e-9 {
            return fail("split fractions must sum to 1");
        }
        if !(self.limit_fraction > 0.0 && self.limit_fraction <= 1.0) {
            return fail("limit_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Split into train/val/test: seeded shuffle, partition by floored
/// fractions (test takes the remainder), then truncate train to
/// `floor(limit_fraction * train_size)`. Limited train sets are prefixes of
/// the full train set, so smaller fractions nest inside larger ones.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset), DataError> {
    spec.validate()?;
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(spec.seed);
    order.shuffle(&mut rng);

    let n_train = (spec.train_frac * n as f64).floor() as usize;
    let n_val = (spec.val_frac * n as f64).floor() as usize;
    if n_train == 0 {
        return Err(DataError::EmptySplit { which: "train" });
    }
    if n_val == 0 {
        return Err(DataError::EmptySplit { which: "val" });
    }
    if n_train + n_val >= n {
        return Err(DataError::EmptySplit { which: "test" });
    }
    let n_limited = (spec.limit_fraction * n_train as f64).floor() as usize;
    if n_limited == 0 {
        return Err(DataError::EmptySplit { which: "train" });
    }

    let train_idx = &order[..n_limited];
    let val_idx = &order[n_train..n_train + n_val];
    let test_idx = &order[n_train + n_val..];
    Ok((
        ds.select(train_idx),
        ds.select(val_idx),
        ds.select(test_idx),
    ))
}

/// Write a dataset to the binary container format.
pub fn write_container(path: &Path, ds: &Dataset) -> Result<(), DataError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(&CONTAINER_MAGIC);
    buf.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    buf.extend_from_slice(&(ds.clips.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.n_classes as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.input_channels as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.teacher_channels as u32).to_le_bytes());
    for (clip, teacher) in ds.clips.iter().zip(&ds.teachers) {
        buf.extend_from_slice(&clip.clip_id.to_le_bytes());
        buf.extend_from_slice(&(clip.frames.rows() as u32).to_le_bytes());
        for v in clip.frames.data() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        buf.extend_from_slice(&clip.targets);
        buf.extend_from_slice(&clip.mask);
        buf.extend_from_slice(&(teacher.rows() as u32).to_le_bytes());
        for v in teacher.data() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

fn read_count<R: std::io::Read>(
    r: &mut CountingReader<R>,
    what: &str,
    min: u32,
) -> Result<usize, DataError> {
    let at = r.offset();
    let v = r.read_u32()?;
    if v < min || v > MAX_DIM {
        return Err(DataError::FormatError {
            offset: at,
            reason: format!("implausible {what}: {v}"),
        });
    }
    Ok(v as usize)
}

fn read_binary_bytes<R: std::io::Read>(
    r: &mut CountingReader<R>,
    n: usize,
    what: &str,
) -> Result<Vec<u8>, DataError> {
    let at = r.offset();
    let mut bytes = vec![0u8; n];
    r.read_exact(&mut bytes)?;
    if let Some(pos) = bytes.iter().position(|&b| b > 1) {
        return Err(DataError::FormatError {
            offset: at + pos as u64,
            reason: format!("{what} byte must be 0 or 1, found {}", bytes[pos]),
        });
    }
    Ok(bytes)
}

fn read_f32_matrix<R: std::io::Read>(
    r: &mut CountingReader<R>,
    rows: usize,
    cols: usize,
) -> Result<Matrix, DataError> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(r.read_f32()? as f64);
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

/// Read a dataset from the binary container format. Errors carry the byte
/// offset of the first malformed field; trailing bytes are rejected.
pub fn read_container(path: &Path) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    let mut r = CountingReader::new(std::io::BufReader::new(file));

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != CONTAINER_MAGIC {
        return Err(DataError::FormatError {
            offset: 0,
            reason: format!("bad magic {magic:02x?}"),
        });
    }
    let version = r.read_u32()?;
    if version != CONTAINER_VERSION {
        return Err(DataError::VersionMismatch { found: version });
    }
    let n_clips = read_count(&mut r, "clip count", 0)?;
    let n_classes = read_count(&mut r, "class count", 1)?;
    let input_channels = read_count(&mut r, "input channel count", 1)?;
    let teacher_channels = read_count(&mut r, "teacher channel count", 1)?;

    let mut clips = Vec::with_capacity(n_clips);
    let mut teachers = Vec::with_capacity(n_clips);
    for _ in 0..n_clips {
        let clip_id = r.read_u32()?;
        let frames_len = read_count(&mut r, "frame count", 1)?;
        let frames = read_f32_matrix(&mut r, frames_len, input_channels)?;
        let targets = read_binary_bytes(&mut r, n_classes, "target")?;
        let mask = read_binary_bytes(&mut r, n_classes, "mask")?;
        let teacher_len = read_count(&mut r, "teacher frame count", 1)?;
        let teacher = read_f32_matrix(&mut r, teacher_len, teacher_channels)?;
        clips.push(LabeledClip {
            clip_id,
            frames,
            targets,
            mask,
        });
        teachers.push(teacher);
    }
    if r.has_more()? {
        return Err(DataError::FormatError {
            offset: r.offset() - 1,
            reason: "trailing bytes after last clip".into(),
        });
    }
    Ok(Dataset {
        clips,
        teachers,
        n_classes,
        input_channels,
        teacher_channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SynthConfig {
        SynthConfig {
            n_clips: 40,
            n_classes: 4,
            latent_dim: 8,
            frames: 3,
            input_channels: 5,
            teacher_channels: 6,
            teacher_noise: 0.1,
            mask_observe_prob: 0.8,
            seed: 11,
        }
    }

    #[test]
    fn generate_validates_config() {
        let mut cfg = small_config();
        cfg.teacher_channels = 9; // exceeds latent_dim
        assert!(matches!(
            generate(&cfg),
            Err(DataError::InvalidConfig { .. })
        ));
        let mut cfg = small_config();
        cfg.mask_observe_prob = 0.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = small_config();
        cfg.n_clips = 0;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn generate_is_deterministic_and_shaped() {
        let cfg = small_config();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
        assert_eq!(a.clips[7].frames.rows(), 3);
        assert_eq!(a.clips[7].frames.cols(), 5);
        assert_eq!(a.teachers[7].rows(), 1);
        assert_eq!(a.teachers[7].cols(), 6);
        assert_eq!(a.clips[7].clip_id, 7);
        // Different seed, different data.
        let mut cfg2 = cfg;
        cfg2.seed = 12;
        assert_ne!(generate(&cfg2).unwrap(), a);
    }

    #[test]
    fn strong_teacher_is_exact_projection_of_latent() {
        // With zero teacher noise, rerunning generation with a nonzero noise
        // changes teachers but nothing else (same draws, scaled differently).
        let mut cfg = small_config();
        cfg.teacher_noise = 0.0;
        let strong = generate(&cfg).unwrap();
        cfg.teacher_noise = 1.0;
        let weak = generate(&cfg).unwrap();
        assert_eq!(strong.clips, weak.clips);
        assert_ne!(strong.teachers, weak.teachers);
    }

    #[test]
    fn full_observation_probability_gives_all_ones_mask() {
        let mut cfg = small_config();
        cfg.mask_observe_prob = 1.0;
        let ds = generate(&cfg).unwrap();
        assert!(ds
            .clips
            .iter()
            .all(|c| c.mask.iter().all(|&m| m == 1)));
    }

    #[test]
    fn label_prevalence_is_roughly_balanced() {
        let cfg = SynthConfig {
            n_clips: 600,
            n_classes: 6,
            latent_dim: 12,
            teacher_channels: 8,
            ..small_config()
        };
        let ds = generate(&cfg).unwrap();
        for k in 0..cfg.n_classes {
            let pos: usize = ds.clips.iter().map(|c| c.targets[k] as usize).sum();
            let prevalence = pos as f64 / cfg.n_clips as f64;
            assert!(
                (0.4..=0.6).contains(&prevalence),
                "class {k} prevalence {prevalence}"
            );
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = generate(&small_config()).unwrap();
        let spec = SplitSpec::default();
        let (train, val, test) = split(&ds, &spec).unwrap();
        assert_eq!(train.len(), 28);
        assert_eq!(val.len(), 6);
        assert_eq!(test.len(), 6);
        let (train2, ..) = split(&ds, &spec).unwrap();
        assert_eq!(train, train2);
        // No clip appears twice.
        let mut ids: Vec<u32> = train
            .clips
            .iter()
            .chain(&val.clips)
            .chain(&test.clips)
            .map(|c| c.clip_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), ds.len());
    }

    #[test]
    fn limited_splits_nest() {
        let ds = generate(&SynthConfig {
            n_clips: 200,
            ..small_config()
        })
        .unwrap();
        let mut previous: Option<Vec<u32>> = None;
        for limit in [0.25, 0.5, 0.75, 1.0] {
            let spec = SplitSpec::default().with_limit(limit);
            let (train, val, test) = split(&ds, &spec).unwrap();
            assert_eq!(train.len(), (limit * 140.0).floor() as usize);
            assert_eq!(val.len(), 30);
            assert_eq!(test.len(), 30);
            let ids: Vec<u32> = train.clips.iter().map(|c| c.clip_id).collect();
            if let Some(prev) = &previous {
                assert_eq!(&ids[..prev.len()], &prev[..], "limited sets must nest");
            }
            previous = Some(ids);
        }
    }

    #[test]
    fn split_rejects_bad_fractions_and_empty_partitions() {
        let ds = generate(&small_config()).unwrap();
        let mut spec = SplitSpec::default();
        spec.val_frac = 0.4; // sums to 1.25
        assert!(matches!(
            split(&ds, &spec),
            Err(DataError::InvalidConfig { .. })
        ));
        let tiny = generate(&SynthConfig {
            n_clips: 2,
            ..small_config()
        })
        .unwrap();
        assert!(matches!(
            split(&tiny, &SplitSpec::default()),
            Err(DataError::EmptySplit { .. })
        ));
    }

    #[test]
    fn container_round_trip_is_bit_exact() {
        let ds = generate(&small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.east");
        write_container(&path, &ds).unwrap();
        let back = read_container(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn container_rejects_corruption_with_offsets() {
        let ds = generate(&small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.east");
        write_container(&path, &ds).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // Bad magic at offset 0.
        let mut bad = bytes.clone();
        bad[1] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            read_container(&path),
            Err(DataError::FormatError { offset: 0, .. })
        ));

        // Foreign version.
        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&3u32.to_le_bytes());
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            read_container(&path),
            Err(DataError::VersionMismatch { found: 3 })
        ));

        // Truncation: offset points inside the file.
        let cut = bytes.len() / 2;
        std::fs::write(&path, &bytes[..cut]).unwrap();
        match read_container(&path) {
            Err(DataError::FormatError { offset, .. }) => {
                assert!(offset as usize <= cut, "offset {offset} beyond cut {cut}");
            }
            other => panic!("expected FormatError, got ok={}", other.is_ok()),
        }

        // Non-binary mask byte: the error names its exact offset.
        // Header is 24 bytes; clip 0: id(4) + T(4) + 3*5 f32 frames (60) +
        // 4 targets; first mask byte sits at 24+4+4+60+4 = 96.
        let mut bad = bytes.clone();
        bad[96] = 7;
        std::fs::write(&path, &bad).unwrap();
        match read_container(&path) {
            Err(DataError::FormatError { offset, reason }) => {
                assert_eq!(offset, 96, "{reason}");
            }
            other => panic!("expected FormatError, got ok={}", other.is_ok()),
        }

        // Trailing garbage.
        let mut bad = bytes.clone();
        bad.extend_from_slice(&[1, 2, 3]);
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(
            read_container(&path),
            Err(DataError::FormatError { .. })
        ));
    }
}
