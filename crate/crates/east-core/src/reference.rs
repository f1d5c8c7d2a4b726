//! Brute-force reference implementations used by the test suites.
//!
//! Everything here is written with explicit loops and no shared code with
//! the production kernels, so agreement between the two is evidence of
//! correctness rather than of copying. These functions assume valid inputs
//! (they panic on shape violations) and favor clarity over speed: O(n²)
//! pair enumeration everywhere.

use crate::linalg::DIST_SMOOTH_EPS;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Cosine distance 1 - cos(a, b), exact norms.
pub fn naive_cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// Mean over unordered sample pairs of the absolute difference between
/// student-side and teacher-side cosine distances, for one time frame.
/// `student[i]` and `teacher[i]` are the i-th sample's feature vectors.
pub fn naive_cos_diff_frame(student: &[Vec<f64>], teacher: &[Vec<f64>]) -> f64 {
    let n = student.len();
    assert_eq!(n, teacher.len());
    assert!(n >= 2);
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let ds = naive_cosine_distance(&student[i], &student[j]);
            let dt = naive_cosine_distance(&teacher[i], &teacher[j]);
            sum += (ds - dt).abs();
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Smoothed pairwise distance matrix: a_ij = sqrt(||x_i - x_j||² + eps)
/// off the diagonal, exactly zero on it — the same convention the
/// differentiable path uses.
fn smoothed_distances(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut acc = DIST_SMOOTH_EPS;
            for c in 0..x[i].len() {
                let diff = x[i][c] - x[j][c];
                acc += diff * diff;
            }
            d[i][j] = acc.sqrt();
        }
    }
    d
}

/// Double-centered copy: subtract row and column means, add the grand mean.
fn double_center(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut row_mean = vec![0.0; n];
    let mut col_mean = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        for j in 0..n {
            row_mean[i] += d[i][j];
            col_mean[j] += d[i][j];
            grand += d[i][j];
        }
    }
    for v in row_mean.iter_mut().chain(col_mean.iter_mut()) {
        *v /= n as f64;
    }
    grand /= (n * n) as f64;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = d[i][j] - row_mean[i] - col_mean[j] + grand;
        }
    }
    out
}

/// V²_n: mean of the entrywise product of two double-centered matrices.
fn v_squared(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i][j] * b[i][j];
        }
    }
    s / (n * n) as f64
}

/// Distance-correlation loss 1 - R²_n for one frame, where R²_n =
/// V²(student, teacher) / sqrt(V²(student) · V²(teacher)). Panics if either
/// side is degenerate (all rows equal); callers test non-degenerate batches.
pub fn naive_dcor_loss_frame(student: &[Vec<f64>], teacher: &[Vec<f64>]) -> f64 {
    let n = student.len();
    assert_eq!(n, teacher.len());
    assert!(n >= 2);
    let a = double_center(&smoothed_distances(student));
    let b = double_center(&smoothed_distances(teacher));
    let v_ll = v_squared(&a, &a);
    let v_vv = v_squared(&b, &b);
    let v_lv = v_squared(&a, &b);
    assert!(v_ll > 0.0 && v_vv > 0.0, "degenerate oracle input");
    1.0 - v_lv / (v_ll * v_vv).sqrt()
}

/// Average precision by per-positive rank counting. A sample's rank is one
/// plus the number of samples strictly above it plus the number of tied
/// samples with a smaller original index (the deterministic tie-break).
pub fn naive_average_precision(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    assert_eq!(n, labels.len());
    let mut precision_sum = 0.0;
    let mut n_pos = 0usize;
    for i in 0..n {
        if labels[i] != 1 {
            continue;
        }
        n_pos += 1;
        let mut rank = 1usize;
        let mut hits = 1usize; // sample i itself
        for j in 0..n {
            if j == i {
                continue;
            }
            let before = scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
            if before {
                rank += 1;
                if labels[j] == 1 {
                    hits += 1;
                }
            }
        }
        precision_sum += hits as f64 / rank as f64;
    }
    assert!(n_pos > 0, "oracle needs at least one positive");
    precision_sum / n_pos as f64
}

/// ROC-AUC by exhaustive positive x negative pair enumeration, ties worth
/// one half.
pub fn naive_roc_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    assert_eq!(n, labels.len());
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..n {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    assert!(pairs > 0, "oracle needs both classes");
    wins / pairs as f64
}
