//! Randomized property tests for the structural contracts: measure ranges,
//! double-centering sums, metric invariances, mask semantics, container
//! round-trips, split partitioning, and student tap shapes.

use proptest::prelude::*;

use east_core::autodiff::Tape;
use east_core::data::{generate, read_container, split, write_container, SplitSpec, SynthConfig};
use east_core::linalg::Matrix;
use east_core::losses::{masked_bce, LabelBatch};
use east_core::measures::{cos_diff_loss_value, dcor_loss_value, AlignedBatch};
use east_core::metrics::{average_precision, roc_auc};
use east_core::models::{StageSpec, StudentNet};

fn matrix_from(rows: usize, cols: usize, data: &[f64]) -> Matrix {
    Matrix::from_vec(rows, cols, data.to_vec()).expect("matrix shape")
}

/// A batch of n clips, each frames x cols, with entries drawn from `range`.
fn clips_strategy(
    n: std::ops::RangeInclusive<usize>,
    frames: std::ops::RangeInclusive<usize>,
    cols: std::ops::RangeInclusive<usize>,
    range: std::ops::Range<f64>,
) -> impl Strategy<Value = Vec<Matrix>> {
    (n, frames, cols).prop_flat_map(move |(n, t, c)| {
        proptest::collection::vec(
            proptest::collection::vec(range.clone(), t * c),
            n,
        )
        .prop_map(move |data| {
            data.iter().map(|d| matrix_from(t, c, d)).collect::<Vec<_>>()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dcor_loss_stays_in_unit_interval(
        student in clips_strategy(3..=8, 1..=3, 1..=6, -2.0..2.0),
        teacher_data in proptest::collection::vec(-2.0..2.0f64, 8 * 3 * 6),
        ct in 1..=6usize,
    ) {
        let n = student.len();
        let t = student[0].rows();
        let teacher: Vec<Matrix> = (0..n)
            .map(|i| matrix_from(t, ct, &teacher_data[i * t * ct..(i + 1) * t * ct]))
            .collect();
        let batch = AlignedBatch::new(student, teacher).expect("valid batch");
        let v = dcor_loss_value(&batch).expect("in-range inputs");
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "loss {v} outside [0, 1]");
    }

    #[test]
    fn cos_diff_loss_stays_in_zero_two(
        student in clips_strategy(2..=8, 1..=3, 1..=6, 0.25..2.0),
        teacher_data in proptest::collection::vec(0.25..2.0f64, 8 * 3 * 6),
        ct in 1..=6usize,
    ) {
        let n = student.len();
        let t = student[0].rows();
        let teacher: Vec<Matrix> = (0..n)
            .map(|i| matrix_from(t, ct, &teacher_data[i * t * ct..(i + 1) * t * ct]))
            .collect();
        let batch = AlignedBatch::new(student, teacher).expect("valid batch");
        let v = cos_diff_loss_value(&batch).expect("nonzero rows");
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&v), "loss {v} outside [0, 2]");
    }

    #[test]
    fn double_centering_zeroes_row_and_column_sums(
        n in 2..=10usize,
        data in proptest::collection::vec(-5.0..5.0f64, 100),
    ) {
        let m = matrix_from(n, n, &data[..n * n]);
        let centered = m.double_center().expect("centering");
        for i in 0..n {
            let row: f64 = (0..n).map(|j| centered.get(i, j)).sum();
            let col: f64 = (0..n).map(|j| centered.get(j, i)).sum();
            prop_assert!(row.abs() < 1e-10, "row {i} sums to {row}");
            prop_assert!(col.abs() < 1e-10, "column {i} sums to {col}");
        }
    }

    #[test]
    fn ranking_metrics_ignore_monotone_score_maps(
        raw in proptest::collection::vec((0..=10u8, proptest::bool::ANY), 3..40),
        a in 0.1..5.0f64,
        b in -3.0..3.0f64,
    ) {
        let labels: Vec<u8> = raw.iter().map(|(_, l)| u8::from(*l)).collect();
        prop_assume!(labels.contains(&1) && labels.contains(&0));
        // Deciles keep ties; the affine map is strictly increasing, so the
        // ranking -- and both metrics -- must not move.
        let scores: Vec<f64> = raw.iter().map(|(s, _)| f64::from(*s) / 10.0).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let ap = average_precision(&scores, &labels).expect("AP");
        let ap_mapped = average_precision(&mapped, &labels).expect("AP mapped");
        prop_assert!((ap - ap_mapped).abs() < 1e-12);
        let auc = roc_auc(&scores, &labels).expect("AUC");
        let auc_mapped = roc_auc(&mapped, &labels).expect("AUC mapped");
        prop_assert!((auc - auc_mapped).abs() < 1e-12);
    }

    #[test]
    fn masked_out_labels_never_touch_the_loss(
        n in 2..=6usize,
        k in 1..=5usize,
        cells in proptest::collection::vec((-3.0..3.0f64, proptest::bool::ANY, proptest::bool::ANY), 30),
    ) {
        let logits = matrix_from(n, k, &cells[..n * k].iter().map(|c| c.0).collect::<Vec<_>>());
        let targets: Vec<f64> = cells[..n * k].iter().map(|c| f64::from(u8::from(c.1))).collect();
        let mut mask: Vec<f64> = cells[..n * k].iter().map(|c| f64::from(u8::from(c.2))).collect();
        mask[0] = 1.0;
        // Flip every target hidden by the mask; the loss must not move a bit.
        let flipped: Vec<f64> = targets
            .iter()
            .zip(&mask)
            .map(|(t, m)| if *m == 0.0 { 1.0 - t } else { *t })
            .collect();

        let value = |target_data: &[f64]| {
            let labels = LabelBatch::new(
                matrix_from(n, k, target_data),
                matrix_from(n, k, &mask),
            )
            .expect("labels");
            let mut tape = Tape::new();
            let x = tape.constant(logits.clone());
            let loss = masked_bce(&mut tape, x, &labels).expect("loss");
            tape.scalar_value(loss)
        };
        prop_assert_eq!(value(&targets).to_bits(), value(&flipped).to_bits());
    }

    #[test]
    fn container_round_trip_is_bit_exact(
        n_clips in 1..=12usize,
        n_classes in 1..=5usize,
        latent in 2..=10usize,
        frames in 1..=3usize,
        input_channels in 1..=6usize,
        noise in 0.0..1.0f64,
        seed in 0..1000u64,
    ) {
        let cfg = SynthConfig {
            n_clips,
            n_classes,
            latent_dim: latent,
            frames,
            input_channels,
            teacher_channels: latent.min(4),
            teacher_noise: noise,
            mask_observe_prob: 0.8,
            seed,
        };
        let ds = generate(&cfg).expect("dataset");
        let dir = tempfile::tempdir().expect("temp dir");
        let path = dir.path().join("ds.bin");
        write_container(&path, &ds).expect("write");
        let back = read_container(&path).expect("read");

        prop_assert_eq!(ds.n_classes, back.n_classes);
        prop_assert_eq!(ds.input_channels, back.input_channels);
        prop_assert_eq!(ds.teacher_channels, back.teacher_channels);
        prop_assert_eq!(ds.clips.len(), back.clips.len());
        for (a, b) in ds.clips.iter().zip(&back.clips) {
            prop_assert_eq!(a.clip_id, b.clip_id);
            prop_assert_eq!(&a.targets, &b.targets);
            prop_assert_eq!(&a.mask, &b.mask);
            let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.frames), bits(&b.frames));
        }
        for (a, b) in ds.teachers.iter().zip(&back.teachers) {
            let bits = |m: &Matrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn splits_partition_the_dataset(
        n_clips in 20..=120usize,
        seed in 0..500u64,
        limit_idx in 0..4usize,
    ) {
        let cfg = SynthConfig {
            n_clips,
            n_classes: 3,
            latent_dim: 8,
            frames: 2,
            input_channels: 4,
            teacher_channels: 4,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg).expect("dataset");
        let limit = [0.25, 0.5, 0.75, 1.0][limit_idx];
        let spec = SplitSpec { seed, ..SplitSpec::default() };

        let (full_train, val, test) = split(&ds, &spec).expect("split");
        let (lim_train, lim_val, lim_test) = split(&ds, &spec.with_limit(limit)).expect("split");

        // The three partitions are disjoint and cover the dataset.
        let mut ids: Vec<u32> = full_train.clips.iter()
            .chain(&val.clips)
            .chain(&test.clips)
            .map(|c| c.clip_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), n_clips, "partitions overlap or drop clips");

        // Limiting keeps a prefix of the shuffled train split and leaves
        // val/test untouched.
        let expect_len = ((full_train.len() as f64) * limit).floor().max(1.0) as usize;
        prop_assert_eq!(lim_train.len(), expect_len);
        for (a, b) in lim_train.clips.iter().zip(&full_train.clips) {
            prop_assert_eq!(a.clip_id, b.clip_id, "limited train is not a prefix");
        }
        let id_list = |d: &east_core::data::Dataset| d.clips.iter().map(|c| c.clip_id).collect::<Vec<_>>();
        prop_assert_eq!(id_list(&lim_val), id_list(&val));
        prop_assert_eq!(id_list(&lim_test), id_list(&test));
    }

    #[test]
    fn student_tap_shapes_follow_the_architecture(
        widths in proptest::collection::vec((1..=6usize, 1..=3usize), 1..=3),
        c_in in 1..=6usize,
        frames in 1..=8usize,
        k in 1..=4usize,
    ) {
        let mut stages = Vec::new();
        let mut prev = c_in;
        for (w, pool) in &widths {
            stages.push(StageSpec::new(prev, *w, *pool));
            prev = *w;
        }
        let net = StudentNet::init(&stages, k, 0).expect("student");
        let input = Matrix::from_vec(frames, c_in, vec![0.5; frames * c_in]).expect("input");
        let (logits, taps) = net.predict(&input).expect("forward");
        prop_assert_eq!(logits.len(), k);
        prop_assert_eq!(taps.len(), stages.len());
        let mut t = frames;
        for (tap, (w, pool)) in taps.iter().zip(&widths) {
            t = t.div_ceil(*pool);
            prop_assert_eq!(tap.rows(), t, "stage frame count");
            prop_assert_eq!(tap.cols(), *w, "stage channel count");
        }
    }
}
