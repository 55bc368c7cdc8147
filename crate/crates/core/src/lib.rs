//! Multilayer breast-cancer detection pipeline over the Wisconsin (original)
//! cytology dataset.
//!
//! The layers are:
//!
//! * [`data`]: parsing, cleaning, stratified splits and folds.
//! * [`fuzzy`]: a Mamdani expert system that relabels records from a rule file.
//! * [`numeric`]: kernels and a Cholesky-backed SPD solver.
//! * [`elm`]: the kernel extreme learning machine (RBF).
//! * [`svm`]: a linear SVM trained with simplified SMO, used as the baseline.
//! * [`metrics`]: RMSE, correlation / R², MAPE and confusion-matrix rates.
//! * [`eval`]: the 70/20/10 phase experiment and 7/2/1 ten-fold rotation.
//! * [`persist`]: versioned JSON envelopes for models and reports.

pub mod data;
pub mod elm;
pub mod eval;
pub mod fuzzy;
pub mod metrics;
pub mod numeric;
pub mod persist;
pub mod svm;

pub use data::{Class, Record, RecordSet, N_FEATURES};
pub use elm::ElmModel;
pub use eval::{CvReport, ExperimentConfig, LabelSource, ModelKind, PhaseReport};
pub use fuzzy::RuleBase;
pub use metrics::{ConfusionMatrix, MetricReport};
pub use numeric::{FeatureVector, KernelSpec};
pub use svm::{SmoSettings, SvmModel};
