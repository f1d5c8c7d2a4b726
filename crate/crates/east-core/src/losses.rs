//! Prediction-space losses and the composite objectives of the seven
//! training systems.
//!
//! Every system minimizes some mix of three ingredients:
//!
//! * `pred` — masked binary cross-entropy against ground-truth labels;
//! * `kd` — soft-target distillation toward sigmoids of teacher logits at a
//!   temperature, scaled by temperature squared so its gradient magnitude is
//!   temperature-independent;
//! * `reg` — a feature-space measure from [`crate::measures`].
//!
//! The mixes:
//!
//! ```text
//! baseline       pred
//! teacher-lr     pred                      (on teacher embeddings)
//! kd             (1-a) pred + a kd
//! east-*         (1-l) pred + l reg
//! east-kd        (1-l) [(1-a) pred + a kd] + l reg
//! ```

use crate::autodiff::{Tape, Var};
use crate::linalg::{Matrix, NumericError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("{name} = {value} is outside its valid range {range}")]
    WeightOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("every entry is masked out")]
    EmptyMask,
    #[error("{what} must contain only 0 or 1 entries")]
    NotBinary { what: &'static str },
    #[error("system {system} requires a {component}")]
    MissingComponent {
        system: &'static str,
        component: &'static str,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// The seven training systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemVariant {
    /// Student trained on labels only.
    Baseline,
    /// Logistic regression on time-averaged teacher embeddings.
    TeacherLr,
    /// Student distilled from teacher predictions.
    Kd,
    /// Student regularized toward teacher embeddings via cosine-distance
    /// difference at the final stage.
    EastCosDiff,
    /// Student regularized via distance correlation at the final stage.
    EastFinal,
    /// Distance correlation applied at every stage, averaged.
    EastAll,
    /// Distillation and final-stage distance correlation combined.
    EastKd,
}

impl SystemVariant {
    pub const ALL: [SystemVariant; 7] = [
        SystemVariant::Baseline,
        SystemVariant::TeacherLr,
        SystemVariant::Kd,
        SystemVariant::EastCosDiff,
        SystemVariant::EastFinal,
        SystemVariant::EastAll,
        SystemVariant::EastKd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemVariant::Baseline => "baseline",
            SystemVariant::TeacherLr => "teacher-lr",
            SystemVariant::Kd => "kd",
            SystemVariant::EastCosDiff => "east-cos-diff",
            SystemVariant::EastFinal => "east-final",
            SystemVariant::EastAll => "east-all",
            SystemVariant::EastKd => "east-kd",
        }
    }

    pub fn parse(s: &str) -> Option<SystemVariant> {
        SystemVariant::ALL.iter().copied().find(|v| v.name() == s)
    }

    /// Does the loss include a soft-target distillation term?
    pub fn uses_kd(self) -> bool {
        matches!(self, SystemVariant::Kd | SystemVariant::EastKd)
    }

    /// Does the loss include a feature-space regularizer?
    pub fn uses_regularizer(self) -> bool {
        matches!(
            self,
            SystemVariant::EastCosDiff
                | SystemVariant::EastFinal
                | SystemVariant::EastAll
                | SystemVariant::EastKd
        )
    }

    /// Regularize every stage (true) or only the final one (false)?
    pub fn regularizes_all_stages(self) -> bool {
        matches!(self, SystemVariant::EastAll)
    }
}

impl std::fmt::Display for SystemVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ground-truth multi-label targets with a per-entry observation mask.
/// Both matrices are n x K with entries in {0, 1}; loss terms average over
/// masked-in entries only, so unobserved labels contribute nothing.
#[derive(Debug, Clone)]
pub struct LabelBatch {
    targets: Matrix,
    mask: Matrix,
}

impl LabelBatch {
    pub fn new(targets: Matrix, mask: Matrix) -> Result<Self, LossError> {
        if !targets.same_shape(&mask) {
            return Err(LossError::Numeric(NumericError::DimensionMismatch {
                op: "label_batch",
                left_rows: targets.rows(),
                left_cols: targets.cols(),
                right_rows: mask.rows(),
                right_cols: mask.cols(),
            }));
        }
        if targets.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(LossError::NotBinary { what: "targets" });
        }
        if mask.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(LossError::NotBinary { what: "mask" });
        }
        Ok(LabelBatch { targets, mask })
    }

    /// Fully observed labels.
    pub fn dense(targets: Matrix) -> Result<Self, LossError> {
        let mask = targets.map(|_| 1.0);
        LabelBatch::new(targets, mask)
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn mask(&self) -> &Matrix {
        &self.mask
    }

    pub fn observed(&self) -> usize {
        self.mask.data().iter().filter(|&&v| v != 0.0).count()
    }
}

/// Mixing weights of the composite objectives.
#[derive(Debug, Clone, Copy)]
pub struct CompositeWeights {
    /// Weight of the feature-space regularizer, in [0, 1].
    pub lambda: f64,
    /// Weight of the distillation term inside the prediction mix, in [0, 1].
    pub alpha: f64,
    /// Softening temperature for distillation, > 0.
    pub temperature: f64,
}

impl CompositeWeights {
    pub fn new(lambda: f64, alpha: f64, temperature: f64) -> Result<Self, LossError> {
        check_unit_weight("lambda", lambda)?;
        check_unit_weight("alpha", alpha)?;
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(LossError::WeightOutOfRange {
                name: "temperature",
                value: temperature,
                range: "(0, inf)",
            });
        }
        Ok(CompositeWeights {
            lambda,
            alpha,
            temperature,
        })
    }
}

impl Default for CompositeWeights {
    /// Midpoint mixing with a mild temperature; experiments normally sweep
    /// lambda rather than rely on this.
    fn default() -> Self {
        CompositeWeights {
            lambda: 0.5,
            alpha: 0.5,
            temperature: 2.0,
        }
    }
}

fn check_unit_weight(name: &'static str, value: f64) -> Result<(), LossError> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(LossError::WeightOutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Masked binary cross-entropy between logits and ground-truth labels,
/// averaged over masked-in entries.
pub fn masked_bce(tape: &mut Tape, logits: Var, labels: &LabelBatch) -> Result<Var, LossError> {
    if labels.observed() == 0 {
        return Err(LossError::EmptyMask);
    }
    Ok(tape.bce_with_logits(logits, &labels.targets, &labels.mask)?)
}

/// Soft-target distillation: binary cross-entropy between the student's
/// temperature-scaled logits and sigmoids of the teacher's
/// temperature-scaled logits, averaged over masked-in entries and scaled by
/// `temperature^2`. Gradients reach the student logits only.
pub fn kd_loss(
    tape: &mut Tape,
    student_logits: Var,
    teacher_logits: &Matrix,
    temperature: f64,
    mask: &Matrix,
) -> Result<Var, LossError> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(LossError::WeightOutOfRange {
            name: "temperature",
            value: temperature,
            range: "(0, inf)",
        });
    }
    if mask.data().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(LossError::NotBinary { what: "mask" });
    }
    if mask.data().iter().all(|&v| v == 0.0) {
        return Err(LossError::EmptyMask);
    }
    let soft_targets = teacher_logits.scale(1.0 / temperature).sigmoid();
    let scaled_student = tape.scale(student_logits, 1.0 / temperature);
    let bce = tape.bce_with_logits(scaled_student, &soft_targets, mask)?;
    Ok(tape.scale(bce, temperature * temperature))
}

/// The two-term mix `(1 - lambda) * pred + lambda * reg`.
pub fn composite_loss(
    tape: &mut Tape,
    pred: Var,
    reg: Var,
    lambda: f64,
) -> Result<Var, LossError> {
    check_unit_weight("lambda", lambda)?;
    let p = tape.scale(pred, 1.0 - lambda);
    let r = tape.scale(reg, lambda);
    Ok(tape.add(p, r)?)
}

/// Assemble the training objective of `variant` from its parts.
///
/// `reg_by_stage` carries one regularizer node per stage that was measured;
/// final-stage systems read its last element, the all-stage system averages
/// all of them. Missing required parts surface as [`LossError::MissingComponent`].
pub fn system_loss(
    tape: &mut Tape,
    variant: SystemVariant,
    pred: Var,
    kd: Option<Var>,
    reg_by_stage: &[Var],
    weights: &CompositeWeights,
) -> Result<Var, LossError> {
    check_unit_weight("lambda", weights.lambda)?;
    check_unit_weight("alpha", weights.alpha)?;

    let kd_required = |kd: Option<Var>| {
        kd.ok_or(LossError::MissingComponent {
            system: variant.name(),
            component: "distillation term (teacher logits)",
        })
    };
    let reg_final = |regs: &[Var]| {
        regs.last().copied().ok_or(LossError::MissingComponent {
            system: variant.name(),
            component: "feature-space regularizer",
        })
    };

    match variant {
        SystemVariant::Baseline | SystemVariant::TeacherLr => Ok(pred),
        SystemVariant::Kd => {
            let kd = kd_required(kd)?;
            let p = tape.scale(pred, 1.0 - weights.alpha);
            let k = tape.scale(kd, weights.alpha);
            Ok(tape.add(p, k)?)
        }
        SystemVariant::EastCosDiff | SystemVariant::EastFinal => {
            let reg = reg_final(reg_by_stage)?;
            composite_loss(tape, pred, reg, weights.lambda)
        }
        SystemVariant::EastAll => {
            if reg_by_stage.is_empty() {
                return Err(LossError::MissingComponent {
                    system: variant.name(),
                    component: "per-stage regularizers",
                });
            }
            let mut acc = reg_by_stage[0];
            for r in &reg_by_stage[1..] {
                acc = tape.add(acc, *r)?;
            }
            let mean_reg = tape.scale(acc, 1.0 / reg_by_stage.len() as f64);
            composite_loss(tape, pred, mean_reg, weights.lambda)
        }
        SystemVariant::EastKd => {
            let kd = kd_required(kd)?;
            let reg = reg_final(reg_by_stage)?;
            let p = tape.scale(pred, 1.0 - weights.alpha);
            let k = tape.scale(kd, weights.alpha);
            let inner = tape.add(p, k)?;
            composite_loss(tape, inner, reg, weights.lambda)
        }
    }
}
