//! Built-in verification suite: a reduced version of the oracle and
//! invariant tests, runnable from the installed binary to confirm a build
//! behaves correctly on the host it will run experiments on.
//!
//! Each check is independent and reports pass/fail with a one-line detail;
//! the whole suite runs in seconds.

use crate::autodiff::Tape;
use crate::data::{generate, read_container, split, write_container, SplitSpec, SynthConfig};
use crate::linalg::{finite_diff_gradient, Matrix};
use crate::losses::{composite_loss, kd_loss, masked_bce, LabelBatch, SystemVariant};
use crate::measures::{
    cos_diff_loss_value, dcor_loss_value, regularization_loss, AlignedBatch, MeasureKind,
};
use crate::metrics::{average_precision, roc_auc};
use crate::models::{random_orthonormal_rows, random_uniform, seeded_rng, StageSpec};
use crate::reference::{
    naive_average_precision, naive_cos_diff_frame, naive_dcor_loss_frame, naive_roc_auc,
};
use crate::trainer::{train_system, SplitDatasets, SystemConfig};
use rand::Rng;

/// Result of one self-test check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = Result<String, String>;

fn random_frame(seed: u64, n: usize, cs: usize, ct: usize) -> (Vec<Matrix>, Vec<Matrix>) {
    let mut rng = seeded_rng(seed);
    let student: Vec<Matrix> = (0..n)
        .map(|_| random_uniform(&mut rng, 1, cs, 1.5).map(|v| v + 0.1))
        .collect();
    let teacher: Vec<Matrix> = (0..n)
        .map(|_| random_uniform(&mut rng, 1, ct, 1.5).map(|v| v - 0.1))
        .collect();
    (student, teacher)
}

fn rows_of(mats: &[Matrix]) -> Vec<Vec<f64>> {
    mats.iter().map(|m| m.row_slice(0).to_vec()).collect()
}

fn dcor_oracle_agreement() -> Check {
    let mut rng = seeded_rng(0xD0);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(3..=16);
        let cs = rng.random_range(1..=6);
        let ct = rng.random_range(1..=6);
        let (student, teacher) = random_frame(1000 + case, n, cs, ct);
        let got = dcor_loss_value(
            &AlignedBatch::new(student.clone(), teacher.clone()).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let want = naive_dcor_loss_frame(&rows_of(&student), &rows_of(&teacher));
        let rel = (got - want).abs() / want.abs().max(1e-9);
        worst = worst.max(rel);
        if rel > 1e-12 {
            return Err(format!("case {case}: rel err {rel:.3e} exceeds 1e-12"));
        }
    }
    Ok(format!("20 random frames, worst rel err {worst:.3e}"))
}

fn cos_diff_oracle_agreement() -> Check {
    let mut rng = seeded_rng(0xC0);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(3..=16);
        let cs = rng.random_range(2..=6);
        let ct = rng.random_range(2..=6);
        let (student, teacher) = random_frame(2000 + case, n, cs, ct);
        let got = cos_diff_loss_value(
            &AlignedBatch::new(student.clone(), teacher.clone()).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let want = naive_cos_diff_frame(&rows_of(&student), &rows_of(&teacher));
        let err = (got - want).abs();
        worst = worst.max(err);
        if err > 1e-10 {
            return Err(format!("case {case}: abs err {err:.3e} exceeds 1e-10"));
        }
    }
    Ok(format!("20 random frames, worst abs err {worst:.3e}"))
}

fn dcor_golden_three_point() -> Check {
    let points = |vals: [f64; 3]| {
        vals.iter()
            .map(|&v| Matrix::from_rows(&[vec![v]]).expect("1x1"))
            .collect::<Vec<_>>()
    };
    let batch = AlignedBatch::new(points([0.0, 1.0, 3.0]), points([0.0, 1.0, 2.0]))
        .map_err(|e| e.to_string())?;
    let got = dcor_loss_value(&batch).map_err(|e| e.to_string())?;
    let want = 1.0 - 15f64.sqrt() / 4.0;
    let err = (got - want).abs();
    if err > 1e-9 {
        return Err(format!("got {got}, want {want}, err {err:.3e}"));
    }
    Ok(format!("loss {got:.12} matches 1 - sqrt(15)/4"))
}

fn kd_golden_value() -> Check {
    let mut tape = Tape::new();
    let student = tape.input(Matrix::from_rows(&[vec![2.0]]).expect("1x1"));
    let teacher = Matrix::from_rows(&[vec![0.0]]).expect("1x1");
    let mask = Matrix::from_rows(&[vec![1.0]]).expect("1x1");
    let loss = kd_loss(&mut tape, student, &teacher, 2.0, &mask).map_err(|e| e.to_string())?;
    let got = tape.scalar_value(loss);
    let want = 3.2530467500728915;
    let err = (got - want).abs();
    if err > 1e-12 {
        return Err(format!("got {got}, want {want}"));
    }
    Ok(format!("distillation loss {got:.16} matches hand value"))
}

fn dcor_transform_invariance() -> Check {
    let mut worst = 0.0f64;
    for case in 0..3 {
        let (student, teacher) = random_frame(3000 + case, 8, 4, 3);
        let base = dcor_loss_value(
            &AlignedBatch::new(student.clone(), teacher.clone()).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let mut rng = seeded_rng(4000 + case);
        let q = random_orthonormal_rows(&mut rng, 4, 4).map_err(|e| e.to_string())?;
        let shift = random_uniform(&mut rng, 1, 4, 2.0);
        let transformed: Vec<Matrix> = student
            .iter()
            .map(|m| {
                m.matmul(&q)
                    .map(|x| x.scale(2.5))
                    .and_then(|x| x.add_row(&shift))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let moved = dcor_loss_value(
            &AlignedBatch::new(transformed, teacher.clone()).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        let err = (moved - base).abs();
        worst = worst.max(err);
        if err > 1e-7 {
            return Err(format!(
                "case {case}: drift {err:.3e} under orthogonal·scale·shift"
            ));
        }
    }
    Ok(format!("3 transforms, worst drift {worst:.3e}"))
}

fn cos_diff_scale_invariance() -> Check {
    let (student, teacher) = random_frame(5000, 7, 4, 3);
    let base = cos_diff_loss_value(
        &AlignedBatch::new(student.clone(), teacher.clone()).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let scaled: Vec<Matrix> = student
        .iter()
        .enumerate()
        .map(|(i, m)| m.scale(0.5 + i as f64))
        .collect();
    let moved = cos_diff_loss_value(
        &AlignedBatch::new(scaled, teacher).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let err = (moved - base).abs();
    if err > 1e-12 {
        return Err(format!("drift {err:.3e} under per-sample rescaling"));
    }
    Ok(format!("drift {err:.3e} under per-sample positive rescaling"))
}

/// Relative-error gradient check of a tape-built loss against central
/// finite differences on one input matrix.
fn grad_check(
    name: &str,
    x0: &Matrix,
    build: impl Fn(&mut Tape, crate::autodiff::Var) -> Result<crate::autodiff::Var, String>,
) -> Check {
    let mut tape = Tape::new();
    let x = tape.input(x0.clone());
    let loss = build(&mut tape, x)?;
    let grads = tape.backward(loss).map_err(|e| e.to_string())?;
    let analytic = grads
        .wrt(x)
        .ok_or_else(|| format!("{name}: no gradient reached the input"))?
        .clone();
    let fd = finite_diff_gradient(
        &mut |m: &Matrix| {
            let mut t = Tape::new();
            let v = t.input(m.clone());
            let l = build(&mut t, v).map_err(|_| crate::linalg::NumericError::NonFiniteValue {
                op: "selftest gradient check",
            })?;
            Ok(t.scalar_value(l))
        },
        x0,
        1e-5,
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..analytic.rows() {
        for j in 0..analytic.cols() {
            let a = analytic.get(i, j);
            let f = fd.get(i, j);
            let rel = (a - f).abs() / a.abs().max(f.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    if worst > 1e-4 {
        return Err(format!("{name}: worst rel err {worst:.3e} exceeds 1e-4"));
    }
    Ok(format!("{name}: worst rel err {worst:.3e}"))
}

fn gradient_checks() -> Check {
    let mut details = Vec::new();
    let mut rng = seeded_rng(0x6AD);

    // Masked binary cross-entropy with respect to logits.
    let logits = random_uniform(&mut rng, 3, 4, 2.0);
    let targets = random_uniform(&mut rng, 3, 4, 0.5).map(|v| f64::from(u8::from(v > 0.0)));
    let mask = random_uniform(&mut rng, 3, 4, 0.5).map(|v| f64::from(u8::from(v > -0.2)));
    let labels = LabelBatch::new(targets, mask).map_err(|e| e.to_string())?;
    details.push(grad_check("masked-bce", &logits, |tape, x| {
        masked_bce(tape, x, &labels).map_err(|e| e.to_string())
    })?);

    // Distillation loss with respect to student logits.
    let teacher_logits = random_uniform(&mut rng, 3, 4, 1.5);
    let kd_mask = Matrix::zeros(3, 4).map(|_| 1.0);
    details.push(grad_check("distillation", &logits, |tape, x| {
        kd_loss(tape, x, &teacher_logits, 2.0, &kd_mask).map_err(|e| e.to_string())
    })?);

    // Both regularizers with respect to one student map in a batch of 4.
    let (student, teacher) = random_frame(0x6AD1, 4, 3, 3);
    for (kind, label) in [
        (MeasureKind::CosDiff, "cos-diff"),
        (MeasureKind::DistanceCorrelation, "dcor"),
    ] {
        let others: Vec<Matrix> = student[1..].to_vec();
        let teacher = teacher.clone();
        details.push(grad_check(label, &student[0], |tape, x| {
            let mut maps = vec![x];
            for m in &others {
                maps.push(tape.constant(m.clone()));
            }
            regularization_loss(tape, kind, &maps, &teacher).map_err(|e| e.to_string())
        })?);
    }

    Ok(details.join("; "))
}

fn metrics_oracle_agreement() -> Check {
    let mut rng = seeded_rng(0x3E7);
    for case in 0..20 {
        let n = rng.random_range(4..=80);
        let mut scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if case % 2 == 0 {
            for s in scores.iter_mut() {
                *s = (*s * 4.0).round() / 4.0;
            }
        }
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == n {
            continue;
        }
        let ap = average_precision(&scores, &labels).map_err(|e| e.to_string())?;
        if (ap - naive_average_precision(&scores, &labels)).abs() > 1e-12 {
            return Err(format!("case {case}: AP disagrees with oracle"));
        }
        let auc = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        if (auc - naive_roc_auc(&scores, &labels)).abs() > 1e-12 {
            return Err(format!("case {case}: AUC disagrees with oracle"));
        }
    }
    let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).map_err(|e| e.to_string())?;
    if (ap - 5.0 / 6.0).abs() > f64::EPSILON {
        return Err(format!("AP hand case: got {ap}, want 5/6"));
    }
    let auc = roc_auc(&[0.3, 0.3, 0.3, 0.3], &[1, 0, 1, 0]).map_err(|e| e.to_string())?;
    if auc != 0.5 {
        return Err(format!("AUC tie case: got {auc}, want exactly 0.5"));
    }
    Ok("random instances match oracles; hand cases exact".into())
}

fn container_round_trip() -> Check {
    let ds = generate(&SynthConfig {
        n_clips: 12,
        n_classes: 3,
        latent_dim: 6,
        frames: 3,
        input_channels: 4,
        teacher_channels: 4,
        teacher_noise: 0.2,
        mask_observe_prob: 0.8,
        seed: 0x10,
    })
    .map_err(|e| e.to_string())?;
    let path = std::env::temp_dir().join(format!(
        "east-selftest-{}-{:x}.east",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    let result = (|| {
        write_container(&path, &ds).map_err(|e| e.to_string())?;
        let back = read_container(&path).map_err(|e| e.to_string())?;
        if back != ds {
            return Err("round-tripped dataset differs".to_string());
        }
        Ok("12-clip dataset round-trips bit-exactly".to_string())
    })();
    let _ = std::fs::remove_file(&path);
    result
}

fn lambda_affinity() -> Check {
    let p0 = 0.8125;
    let r0 = 0.4375;
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut tape = Tape::new();
        let p = tape.constant(Matrix::scalar(p0));
        let r = tape.constant(Matrix::scalar(r0));
        let l = composite_loss(&mut tape, p, r, lambda).map_err(|e| e.to_string())?;
        let got = tape.scalar_value(l);
        let want = (1.0 - lambda) * p0 + lambda * r0;
        if (got - want).abs() > 1e-12 {
            return Err(format!("λ={lambda}: got {got}, want {want}"));
        }
    }
    Ok("composite loss is affine in λ at 5 grid points".into())
}

fn dcor_two_sample_degeneracy() -> Check {
    let (student, teacher) = random_frame(0x2, 2, 3, 3);
    let loss = dcor_loss_value(&AlignedBatch::new(student, teacher).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if loss.abs() > 1e-12 {
        return Err(format!("two-sample loss {loss:.3e} is not identically 0"));
    }
    Ok(format!("two-sample batch collapses to {loss:.3e}"))
}

fn lambda_zero_training_equivalence() -> Check {
    let ds = generate(&SynthConfig {
        n_clips: 30,
        n_classes: 2,
        latent_dim: 6,
        frames: 4,
        input_channels: 5,
        teacher_channels: 4,
        teacher_noise: 0.0,
        mask_observe_prob: 1.0,
        seed: 0x11,
    })
    .map_err(|e| e.to_string())?;
    let (train, val, test) = split(&ds, &SplitSpec::default()).map_err(|e| e.to_string())?;
    let splits = SplitDatasets { train, val, test };
    let arch = [StageSpec::new(5, 6, 2)];
    let mut cfg = SystemConfig {
        epochs: 2,
        patience: 2,
        ..SystemConfig::default()
    };
    cfg.variant = SystemVariant::Baseline;
    let baseline = train_system(&arch, &cfg, &splits, None).map_err(|e| e.to_string())?;
    cfg.variant = SystemVariant::EastFinal;
    cfg.lambda = 0.0;
    let east = train_system(&arch, &cfg, &splits, None).map_err(|e| e.to_string())?;
    for (a, b) in baseline.history.iter().zip(&east.history) {
        if a.train_loss.to_bits() != b.train_loss.to_bits()
            || a.val_map.to_bits() != b.val_map.to_bits()
        {
            return Err(format!(
                "epoch {}: λ=0 trajectory diverges from baseline",
                a.epoch
            ));
        }
    }
    Ok("feature-regularized run with λ=0 replays the baseline bit-for-bit".into())
}

/// Run every check and collect the outcomes.
pub fn run_all() -> Vec<CheckOutcome> {
    let checks: Vec<(&'static str, fn() -> Check)> = vec![
        ("dcor-oracle-agreement", dcor_oracle_agreement),
        ("cos-diff-oracle-agreement", cos_diff_oracle_agreement),
        ("dcor-golden-three-point", dcor_golden_three_point),
        ("kd-golden-value", kd_golden_value),
        ("dcor-transform-invariance", dcor_transform_invariance),
        ("cos-diff-scale-invariance", cos_diff_scale_invariance),
        ("gradient-checks", gradient_checks),
        ("metrics-oracle-agreement", metrics_oracle_agreement),
        ("container-round-trip", container_round_trip),
        ("lambda-affinity", lambda_affinity),
        ("dcor-two-sample-degeneracy", dcor_two_sample_degeneracy),
        (
            "lambda-zero-training-equivalence",
            lambda_zero_training_equivalence,
        ),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => CheckOutcome {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckOutcome {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}
