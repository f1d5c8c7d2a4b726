//! Embeddings-as-teachers: train low-complexity student networks whose
//! intermediate feature maps are pulled toward pre-computed teacher
//! embeddings, alongside classical prediction-space distillation.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] — dense row-major `f64` matrices with deterministic kernels.
//! * [`autodiff`] — a matrix-valued reverse-mode tape built on those kernels.
//! * [`measures`] — time alignment and the two feature-space distances
//!   (cosine-distance difference, distance correlation).
//! * [`losses`] — masked BCE, soft-target distillation, and the composite
//!   objective that mixes prediction and regularization terms per system.
//! * [`models`] — the student CNN, the logistic-regression teacher head,
//!   checkpoints, and complexity probes.
//! * [`data`] — synthetic labeled-clip generation, splits, and the binary
//!   dataset container.
//! * [`metrics`] — average precision, macro F1, ROC-AUC.
//! * [`trainer`] — deterministic SGD training of the seven systems, the
//!   lambda sweep, and the limited-data experiment.
//! * [`reference`] — naive re-implementations used as oracles by tests and
//!   the CLI self-test.

pub mod autodiff;
mod byteio;
pub mod data;
pub mod linalg;
pub mod losses;
pub mod measures;
pub mod metrics;
pub mod models;
pub mod reference;
pub mod selftest;
pub mod trainer;
