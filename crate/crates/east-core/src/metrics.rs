//! Multi-label evaluation: average precision, the paper-style macro F1
//! (positive and negative polarity averaged, fixed threshold), and ROC-AUC,
//! plus a per-class report with masked-label support.
//!
//! Rank-based metrics break score ties by ascending original index, so every
//! value is a deterministic function of its inputs. Classes for which a
//! metric is undefined on the observed entries (no positives, one class,
//! empty mask) are skipped with a warning and reported as absent; aggregates
//! are means over the classes that remain.

use crate::linalg::Matrix;
use thiserror::Error;

/// Default decision threshold used everywhere F1 is reported.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric input is empty")]
    EmptyInput,
    #[error("scores have {scores} entries but labels have {labels}")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("{what} must have {expected_rows}x{expected_cols} entries, got {got_rows}x{got_cols}")]
    ShapeMismatch {
        what: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("score at index {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("{what} at index {index} must be 0 or 1, found {value}")]
    NotBinary {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("no positive labels: average precision is undefined")]
    NoPositives,
    #[error("only one class present: ROC-AUC is undefined")]
    SingleClass,
    #[error("threshold {value} must lie strictly between 0 and 1")]
    InvalidThreshold { value: f64 },
    #[error("{metric} is undefined for every class")]
    NoUsableClass { metric: &'static str },
}

fn validate_pair(scores: &[f64], labels: &[u8]) -> Result<(), MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore { index: i });
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(MetricError::NotBinary {
            what: "label",
            index: i,
            value: labels[i] as f64,
        });
    }
    Ok(())
}

/// Indices sorted by descending score; ties keep ascending original index.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Average precision: mean over positives, in rank order, of the precision
/// at that rank (no interpolation).
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    validate_pair(scores, labels)?;
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank0, &i) in descending_order(scores).iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            precision_sum += hits as f64 / (rank0 + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(MetricError::NoPositives);
    }
    Ok(precision_sum / hits as f64)
}

/// ROC-AUC in Mann-Whitney form: the probability that a uniformly random
/// positive outranks a uniformly random negative, ties counted one half.
/// Computed from average ranks, so tied blocks contribute exactly ½ each.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    validate_pair(scores, labels)?;
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }

    // Ascending order; assign each tied block the mean of its 1-based ranks.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0; // mean of start+1 ..= end
        for &i in &order[start..end] {
            if labels[i] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 for one class over its observed entries, averaged across both label
/// polarities: F1 treating 1 as positive and F1 treating 0 as positive,
/// with predictions `score > threshold` (strict). Zero-denominator F1 is 0.
/// Returns `None` when the class has no observed entries.
fn polarity_f1(scores: &[f64], labels: &[u8], observed: &[bool], threshold: f64) -> Option<f64> {
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    let mut seen = false;
    for i in 0..scores.len() {
        if !observed[i] {
            continue;
        }
        seen = true;
        let pred = scores[i] > threshold;
        let actual = labels[i] == 1;
        match (pred, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    if !seen {
        return None;
    }
    let f1_pos = f1_from_counts(tp, fp, fn_);
    // Flipped polarity: true negatives act as hits, and the error kinds
    // swap roles.
    let f1_neg = f1_from_counts(tn, fn_, fp);
    Some((f1_pos + f1_neg) / 2.0)
}

fn validate_report_inputs(
    scores: &Matrix,
    labels: &Matrix,
    mask: &Matrix,
) -> Result<(), MetricError> {
    if scores.rows() == 0 || scores.cols() == 0 {
        return Err(MetricError::EmptyInput);
    }
    for (what, m) in [("labels", labels), ("mask", mask)] {
        if m.rows() != scores.rows() || m.cols() != scores.cols() {
            return Err(MetricError::ShapeMismatch {
                what,
                expected_rows: scores.rows(),
                expected_cols: scores.cols(),
                got_rows: m.rows(),
                got_cols: m.cols(),
            });
        }
        if let Some(i) = m.data().iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(MetricError::NotBinary {
                what,
                index: i,
                value: m.data()[i],
            });
        }
    }
    if let Some(i) = scores.data().iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore { index: i });
    }
    Ok(())
}

/// Per-class metric values; `None` marks a metric that was undefined for
/// this class on the observed entries (skipped with a warning).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub ap: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
}

/// Aggregate report: each aggregate is the mean of the per-class values
/// that are present.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub map: f64,
    pub macro_f1: f64,
    pub roc_auc: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn mean_present(
    per_class: &[ClassMetrics],
    metric: &'static str,
    pick: impl Fn(&ClassMetrics) -> Option<f64>,
) -> Result<f64, MetricError> {
    let values: Vec<f64> = per_class.iter().filter_map(pick).collect();
    if values.is_empty() {
        return Err(MetricError::NoUsableClass { metric });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Evaluate an `n x K` score matrix against observed labels. Unobserved
/// (clip, class) entries are excluded everywhere.
pub fn evaluate(
    scores: &Matrix,
    labels: &Matrix,
    mask: &Matrix,
    threshold: f64,
) -> Result<MetricsReport, MetricError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricError::InvalidThreshold { value: threshold });
    }
    validate_report_inputs(scores, labels, mask)?;

    let n = scores.rows();
    let k = scores.cols();
    let mut per_class = Vec::with_capacity(k);
    for class in 0..k {
        let mut s = Vec::new();
        let mut l = Vec::new();
        let mut observed_all = vec![false; n];
        for i in 0..n {
            if mask.get(i, class) == 1.0 {
                observed_all[i] = true;
                s.push(scores.get(i, class));
                l.push(labels.get(i, class) as u8);
            }
        }
        if s.is_empty() {
            log::warn!("class {class}: no observed labels; skipping all metrics");
            per_class.push(ClassMetrics {
                ap: None,
                f1: None,
                auc: None,
            });
            continue;
        }
        let ap = match average_precision(&s, &l) {
            Ok(v) => Some(v),
            Err(MetricError::NoPositives) => {
                log::warn!("class {class}: no observed positives; skipping AP");
                None
            }
            Err(e) => return Err(e),
        };
        let auc = match roc_auc(&s, &l) {
            Ok(v) => Some(v),
            Err(MetricError::SingleClass) => {
                log::warn!("class {class}: single observed class; skipping AUC");
                None
            }
            Err(e) => return Err(e),
        };
        let scores_col: Vec<f64> = (0..n).map(|i| scores.get(i, class)).collect();
        let labels_col: Vec<u8> = (0..n).map(|i| labels.get(i, class) as u8).collect();
        let f1 = polarity_f1(&scores_col, &labels_col, &observed_all, threshold);
        per_class.push(ClassMetrics { ap, f1, auc });
    }

    Ok(MetricsReport {
        map: mean_present(&per_class, "mAP", |c| c.ap)?,
        macro_f1: mean_present(&per_class, "macro F1", |c| c.f1)?,
        roc_auc: mean_present(&per_class, "ROC-AUC", |c| c.auc)?,
        per_class,
    })
}

/// Macro F1 alone, at the given threshold (mean over classes with any
/// observed entry).
pub fn macro_f1(
    scores: &Matrix,
    labels: &Matrix,
    mask: &Matrix,
    threshold: f64,
) -> Result<f64, MetricError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricError::InvalidThreshold { value: threshold });
    }
    validate_report_inputs(scores, labels, mask)?;
    let n = scores.rows();
    let mut values = Vec::new();
    for class in 0..scores.cols() {
        let scores_col: Vec<f64> = (0..n).map(|i| scores.get(i, class)).collect();
        let labels_col: Vec<u8> = (0..n).map(|i| labels.get(i, class) as u8).collect();
        let observed: Vec<bool> = (0..n).map(|i| mask.get(i, class) == 1.0).collect();
        match polarity_f1(&scores_col, &labels_col, &observed, threshold) {
            Some(v) => values.push(v),
            None => log::warn!("class {class}: no observed labels; skipping F1"),
        }
    }
    if values.is_empty() {
        return Err(MetricError::NoUsableClass { metric: "macro F1" });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{naive_average_precision, naive_roc_auc};
    use rand::Rng;

    #[test]
    fn ap_hand_case_matches_five_sixths() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
        // The exact rational 5/6 has no f64 representation; (1 + 2/3)/2
        // lands one ulp from the literal.
        assert!((ap - 5.0 / 6.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn ap_perfect_ranking_is_one() {
        let ap = average_precision(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_no_positives_is_an_error() {
        assert!(matches!(
            average_precision(&[0.3, 0.2], &[0, 0]),
            Err(MetricError::NoPositives)
        ));
    }

    #[test]
    fn ap_ties_break_by_ascending_index() {
        // Tied scores: index 0 (negative) precedes index 1 (positive).
        let ap = average_precision(&[0.5, 0.5, 0.1], &[0, 1, 0]).unwrap();
        assert_eq!(ap, 0.5); // positive lands at rank 2
        // Swapping the tied pair moves the positive to rank 1.
        let ap = average_precision(&[0.5, 0.5, 0.1], &[1, 0, 0]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn auc_tie_case_is_exactly_half() {
        let auc = roc_auc(&[0.7, 0.7, 0.7, 0.7], &[1, 0, 1, 0]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn auc_hand_cases() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        // One concordant pair, one discordant: (1 + 0)/2.
        assert_eq!(roc_auc(&[0.8, 0.6, 0.4], &[1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_is_an_error() {
        assert!(matches!(
            roc_auc(&[0.3, 0.2], &[1, 1]),
            Err(MetricError::SingleClass)
        ));
    }

    #[test]
    fn rank_metrics_match_naive_oracles() {
        let mut rng = crate::models::seeded_rng(404);
        for case in 0..100 {
            let n = rng.random_range(2..=200);
            let mut scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            // Force ties in half the cases to exercise both code paths.
            if case % 2 == 0 {
                for s in scores.iter_mut() {
                    *s = (*s * 8.0).round() / 8.0;
                }
            }
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
            let n_pos = labels.iter().filter(|&&l| l == 1).count();
            if n_pos == 0 || n_pos == n {
                continue;
            }
            let ap = average_precision(&scores, &labels).unwrap();
            let ap_oracle = naive_average_precision(&scores, &labels);
            assert!(
                (ap - ap_oracle).abs() < 1e-12,
                "case {case}: ap {ap} vs oracle {ap_oracle}"
            );
            let auc = roc_auc(&scores, &labels).unwrap();
            let auc_oracle = naive_roc_auc(&scores, &labels);
            assert!(
                (auc - auc_oracle).abs() < 1e-12,
                "case {case}: auc {auc} vs oracle {auc_oracle}"
            );
        }
    }

    #[test]
    fn rank_metrics_are_monotone_invariant() {
        let mut rng = crate::models::seeded_rng(405);
        for _ in 0..30 {
            let n = rng.random_range(3..=60);
            let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
            let n_pos = labels.iter().filter(|&&l| l == 1).count();
            if n_pos == 0 || n_pos == n {
                continue;
            }
            // Strictly increasing map: x -> exp(3x) + x.
            let transformed: Vec<f64> = scores.iter().map(|&s| (3.0 * s).exp() + s).collect();
            assert_eq!(
                average_precision(&scores, &labels).unwrap(),
                average_precision(&transformed, &labels).unwrap()
            );
            assert_eq!(
                roc_auc(&scores, &labels).unwrap(),
                roc_auc(&transformed, &labels).unwrap()
            );
        }
    }

    fn full_mask(rows: usize, cols: usize) -> Matrix {
        Matrix::zeros(rows, cols).map(|_| 1.0)
    }

    #[test]
    fn macro_f1_perfect_predictions_score_one() {
        let scores = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let labels = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mask = full_mask(2, 2);
        assert_eq!(macro_f1(&scores, &labels, &mask, 0.4).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_degenerate_predictor_loses_negative_polarity() {
        // Every score 0.5 > 0.4: all predicted positive. With labels [1, 0]
        // polarity-positive F1 = 2*1/(2*1+1+0) = 2/3, polarity-negative F1
        // has zero true positives → 0. Class value (2/3 + 0)/2 = 1/3.
        let scores = Matrix::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        let labels = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let mask = full_mask(2, 1);
        let f1 = macro_f1(&scores, &labels, &mask, 0.4).unwrap();
        assert!((f1 - (2.0 / 3.0 + 0.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn macro_f1_two_class_hand_case() {
        // Class 0: labels [1,1,0,0], preds [1,0,0,0] → pos: tp=1 fp=0 fn=1
        // → 2/3; neg: tp=2 fp=1 fn=0 → 4/5; class F1 = (2/3 + 4/5)/2.
        // Class 1: labels [1,0,1,0], preds [1,0,1,1] → pos: tp=2 fp=1 fn=0
        // → 4/5; neg: tp=1 fp=0 fn=1 → 2/3; same class value.
        let scores = Matrix::from_rows(&[
            vec![0.9, 0.8],
            vec![0.3, 0.2],
            vec![0.1, 0.7],
            vec![0.2, 0.6],
        ])
        .unwrap();
        let labels = Matrix::from_rows(&[
            vec![1.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let mask = full_mask(4, 2);
        let expected = (2.0 / 3.0 + 4.0 / 5.0) / 2.0;
        let f1 = macro_f1(&scores, &labels, &mask, 0.4).unwrap();
        assert!((f1 - expected).abs() < 1e-15, "{f1} vs {expected}");
    }

    #[test]
    fn threshold_comparison_is_strict() {
        // Score exactly at the threshold is predicted negative.
        let scores = Matrix::from_rows(&[vec![0.4], vec![0.8]]).unwrap();
        let labels = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let mask = full_mask(2, 1);
        assert_eq!(macro_f1(&scores, &labels, &mask, 0.4).unwrap(), 1.0);
    }

    #[test]
    fn masked_entries_are_invisible_to_every_metric() {
        let scores = Matrix::from_rows(&[
            vec![0.9],
            vec![0.2],
            vec![0.6], // masked out below
        ])
        .unwrap();
        let labels = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        let mask = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![0.0]]).unwrap();
        let report = evaluate(&scores, &labels, &mask, 0.4).unwrap();
        let trimmed = evaluate(
            &Matrix::from_rows(&[vec![0.9], vec![0.2]]).unwrap(),
            &Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
            &full_mask(2, 1),
            0.4,
        )
        .unwrap();
        assert_eq!(report, trimmed);
    }

    #[test]
    fn evaluate_skips_unobserved_class_and_averages_the_rest() {
        let scores = Matrix::from_rows(&[vec![0.9, 0.5], vec![0.2, 0.5]]).unwrap();
        let labels = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let mut mask = full_mask(2, 2);
        mask.set(0, 1, 0.0);
        mask.set(1, 1, 0.0); // class 1 fully unobserved
        let report = evaluate(&scores, &labels, &mask, 0.4).unwrap();
        assert_eq!(report.per_class.len(), 2);
        assert_eq!(
            report.per_class[1],
            ClassMetrics {
                ap: None,
                f1: None,
                auc: None
            }
        );
        assert_eq!(report.map, report.per_class[0].ap.unwrap());
    }

    #[test]
    fn aggregates_equal_mean_of_per_class_values() {
        let mut rng = crate::models::seeded_rng(406);
        let n = 40;
        let k = 5;
        let scores = crate::models::random_uniform(&mut rng, n, k, 0.5).map(|v| v + 0.5);
        let mut labels = Matrix::zeros(n, k);
        let mut mask = Matrix::zeros(n, k);
        for i in 0..n {
            for c in 0..k {
                labels.set(i, c, f64::from(u8::from(rng.random::<f64>() < 0.5)));
                mask.set(i, c, f64::from(u8::from(rng.random::<f64>() < 0.8)));
            }
        }
        let report = evaluate(&scores, &labels, &mask, 0.4).unwrap();
        let mean = |pick: fn(&ClassMetrics) -> Option<f64>| {
            let v: Vec<f64> = report.per_class.iter().filter_map(pick).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((report.map - mean(|c| c.ap)).abs() < 1e-12);
        assert!((report.macro_f1 - mean(|c| c.f1)).abs() < 1e-12);
        assert!((report.roc_auc - mean(|c| c.auc)).abs() < 1e-12);
    }

    #[test]
    fn evaluate_rejects_bad_inputs() {
        let scores = Matrix::from_rows(&[vec![0.5], vec![0.6]]).unwrap();
        let labels = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let mask = full_mask(2, 1);
        assert!(matches!(
            evaluate(&scores, &labels, &mask, 0.0),
            Err(MetricError::InvalidThreshold { .. })
        ));
        assert!(matches!(
            evaluate(&scores, &labels, &mask, 1.0),
            Err(MetricError::InvalidThreshold { .. })
        ));
        let bad_labels = Matrix::from_rows(&[vec![2.0], vec![0.0]]).unwrap();
        assert!(matches!(
            evaluate(&scores, &bad_labels, &mask, 0.4),
            Err(MetricError::NotBinary { .. })
        ));
        let short_mask = full_mask(1, 1);
        assert!(matches!(
            evaluate(&scores, &labels, &short_mask, 0.4),
            Err(MetricError::ShapeMismatch { .. })
        ));
        let nan_scores = Matrix::from_rows(&[vec![f64::NAN], vec![0.6]]).unwrap();
        assert!(matches!(
            evaluate(&nan_scores, &labels, &mask, 0.4),
            Err(MetricError::NonFiniteScore { .. })
        ));
    }
}
