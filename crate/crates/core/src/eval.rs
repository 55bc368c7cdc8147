//! Experiment protocols.
//!
//! * Split experiment: stratified 70/20/10 split, train on the first part,
//!   full metric report on each of train / test / validation.
//! * Rotating cross-validation: `k` stratified folds; iteration `i` uses fold
//!   `i` for validation, folds `i+1` and `i+2` (mod `k`) for testing and the
//!   remaining folds for training. With `k = 10` that is 7 train / 2 test /
//!   1 validation, and every record plays each role exactly 7, 2 and 1 times.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, Class, DataError, FoldPlan, Record, RecordSet, SplitPlan, SplitRatios};
use crate::elm::{ElmError, ElmModel};
use crate::fuzzy::FuzzyError;
use crate::metrics::{ConfusionMatrix, MetricError, MetricReport};
use crate::numeric::{self, FeatureVector, KernelSpec};
use crate::svm::{SmoSettings, SvmError, SvmModel};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_ELM_C: f64 = 100.0;
pub const DEFAULT_SVM_C: f64 = 1.0;
pub const STANDARD_FOLDS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("ELM training failed: {0}")]
    Elm(#[from] ElmError),
    #[error("SVM training failed: {0}")]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("record {0} has no fuzzy label; label the set before using fuzzy targets")]
    MissingFuzzyLabel(u64),
    #[error("{0} phase is empty")]
    EmptyPhase(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "elm-rbf")]
    ElmRbf,
    #[serde(rename = "svm-linear")]
    SvmLinear,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ElmRbf => "elm-rbf",
            ModelKind::SvmLinear => "svm-linear",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::ElmRbf => "ELM-RBF",
            ModelKind::SvmLinear => "Linear-SVM",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Original,
    Fuzzy,
}

impl LabelSource {
    pub fn label(self, r: &Record) -> Result<Class, EvalError> {
        match self {
            LabelSource::Original => Ok(r.class),
            LabelSource::Fuzzy => r.fuzzy_label.ok_or(EvalError::MissingFuzzyLabel(r.id)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Regularization (ELM) or box constraint (SVM).
    pub c: f64,
    /// Fixed RBF width; `None` selects the median heuristic per training set.
    pub sigma: Option<f64>,
    pub smo: SmoSettings,
    pub label_source: LabelSource,
    pub ratios: SplitRatios,
    pub seed: u64,
    /// Scale scores from [1, 10] to [0, 1] before training.
    pub normalize: bool,
    pub rules_path: Option<String>,
}

impl ExperimentConfig {
    pub fn new(model: ModelKind) -> Self {
        ExperimentConfig {
            model,
            c: match model {
                ModelKind::ElmRbf => DEFAULT_ELM_C,
                ModelKind::SvmLinear => DEFAULT_SVM_C,
            },
            sigma: None,
            smo: SmoSettings::default(),
            label_source: LabelSource::Original,
            ratios: SplitRatios::STANDARD,
            seed: 0,
            normalize: false,
            rules_path: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.smo.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        self.ratios.validate()?;
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(EvalError::Config(format!(
                "c must be positive, got {}",
                self.c
            )));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(EvalError::Config(format!(
                    "sigma must be positive, got {s}"
                )));
            }
        }
        if self.label_source == LabelSource::Fuzzy && self.rules_path.is_none() {
            return Err(EvalError::Config(
                "fuzzy labels require a rules file".into(),
            ));
        }
        self.smo.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Elm(ElmModel),
    Svm(SvmModel),
}

/// A trained model plus the input scaling it expects.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub model: TrainedModel,
    pub normalize: bool,
}

impl Classifier {
    pub fn features(&self, r: &Record) -> FeatureVector {
        prepare(r, self.normalize)
    }

    pub fn decision(&self, r: &Record) -> f64 {
        let x = self.features(r);
        match &self.model {
            TrainedModel::Elm(m) => m.decision(&x),
            TrainedModel::Svm(m) => m.decision(&x),
        }
    }

    pub fn predict(&self, r: &Record) -> Class {
        Class::from_decision(self.decision(r))
    }

    pub fn sigma(&self) -> Option<f64> {
        match &self.model {
            TrainedModel::Elm(m) => m.kernel.sigma(),
            TrainedModel::Svm(m) => m.kernel.sigma(),
        }
    }
}

fn prepare(r: &Record, normalize: bool) -> FeatureVector {
    let x = r.feature_vector();
    if normalize {
        x.unit_scaled()
    } else {
        x
    }
}

/// Trains the configured model on the records at `indices`.
pub fn train_classifier(
    cfg: &ExperimentConfig,
    rs: &RecordSet,
    indices: &[usize],
) -> Result<Classifier, EvalError> {
    if indices.is_empty() {
        return Err(EvalError::EmptyPhase("train"));
    }
    let inputs: Vec<FeatureVector> = indices
        .iter()
        .map(|&i| prepare(&rs.records[i], cfg.normalize))
        .collect();
    let labels = indices
        .iter()
        .map(|&i| cfg.label_source.label(&rs.records[i]))
        .collect::<Result<Vec<_>, _>>()?;
    let model = match cfg.model {
        ModelKind::ElmRbf => {
            let sigma = cfg
                .sigma
                .unwrap_or_else(|| numeric::median_heuristic_sigma(&inputs));
            let kernel = KernelSpec::rbf(sigma).map_err(ElmError::from)?;
            TrainedModel::Elm(ElmModel::train(&inputs, &labels, kernel, cfg.c)?)
        }
        ModelKind::SvmLinear => TrainedModel::Svm(SvmModel::train(
            &inputs,
            &labels,
            KernelSpec::Linear,
            cfg.c,
            &cfg.smo,
        )?),
    };
    Ok(Classifier {
        model,
        normalize: cfg.normalize,
    })
}

fn evaluate(
    cfg: &ExperimentConfig,
    clf: &Classifier,
    rs: &RecordSet,
    indices: &[usize],
) -> Result<(Vec<Class>, Vec<Class>), EvalError> {
    let mut actual = Vec::with_capacity(indices.len());
    let mut predicted = Vec::with_capacity(indices.len());
    for &i in indices {
        let r = &rs.records[i];
        actual.push(cfg.label_source.label(r)?);
        predicted.push(clf.predict(r));
    }
    Ok((actual, predicted))
}

fn phase_metrics(
    cfg: &ExperimentConfig,
    clf: &Classifier,
    rs: &RecordSet,
    indices: &[usize],
) -> Result<Option<MetricReport>, EvalError> {
    if indices.is_empty() {
        return Ok(None);
    }
    let (a, p) = evaluate(cfg, clf, rs, indices)?;
    Ok(Some(MetricReport::compute(&a, &p)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub dataset_fingerprint: String,
    pub records: usize,
    pub phase_sizes: [usize; 3],
    /// RBF width actually used (after the median heuristic, if any).
    pub sigma: Option<f64>,
    pub train: MetricReport,
    /// Absent when the split ratio for the phase is zero.
    pub test: Option<MetricReport>,
    pub validation: Option<MetricReport>,
}

/// Splits and trains; the plan is what evaluation needs to reproduce the
/// phases later.
pub fn fit_split(
    cfg: &ExperimentConfig,
    rs: &RecordSet,
) -> Result<(Classifier, SplitPlan), EvalError> {
    cfg.validate()?;
    let plan = data::split(rs, cfg.ratios, cfg.seed)?;
    let clf = train_classifier(cfg, rs, &plan.train)?;
    Ok((clf, plan))
}

pub fn evaluate_split(
    cfg: &ExperimentConfig,
    rs: &RecordSet,
    clf: &Classifier,
    plan: &SplitPlan,
) -> Result<PhaseReport, EvalError> {
    let train = phase_metrics(cfg, clf, rs, &plan.train)?.ok_or(EvalError::EmptyPhase("train"))?;
    Ok(PhaseReport {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        dataset_fingerprint: rs.fingerprint(),
        records: rs.len(),
        phase_sizes: [plan.train.len(), plan.test.len(), plan.validation.len()],
        sigma: clf.sigma(),
        train,
        test: phase_metrics(cfg, clf, rs, &plan.test)?,
        validation: phase_metrics(cfg, clf, rs, &plan.validation)?,
    })
}

pub fn run_split_experiment(
    cfg: &ExperimentConfig,
    rs: &RecordSet,
) -> Result<PhaseReport, EvalError> {
    let (clf, plan) = fit_split(cfg, rs)?;
    evaluate_split(cfg, rs, &clf, &plan)
}

/// Record indices for each role in one rotation step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldRoles {
    pub validation_fold: usize,
    pub test_folds: [usize; 2],
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

pub fn fold_roles(plan: &FoldPlan, iteration: usize) -> FoldRoles {
    let k = plan.k;
    let v = iteration % k;
    let tests = [(v + 1) % k, (v + 2) % k];
    let mut roles = FoldRoles {
        validation_fold: v,
        test_folds: tests,
        train: Vec::new(),
        test: Vec::new(),
        validation: Vec::new(),
    };
    for (idx, &f) in plan.assignments.iter().enumerate() {
        if f == v {
            roles.validation.push(idx);
        } else if tests.contains(&f) {
            roles.test.push(idx);
        } else {
            roles.train.push(idx);
        }
    }
    roles
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvIteration {
    pub iteration: usize,
    pub validation_fold: usize,
    pub test_folds: [usize; 2],
    pub sizes: [usize; 3],
    pub sigma: Option<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub validation_accuracy: f64,
    pub test: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub dataset_fingerprint: String,
    pub records: usize,
    pub k: usize,
    /// False when `k` differs from the 10-fold 7/2/1 scheme.
    pub standard_scheme: bool,
    pub iterations: Vec<CvIteration>,
    pub mean_train_accuracy: f64,
    pub mean_test_accuracy: f64,
    pub mean_validation_accuracy: f64,
    /// Test predictions of all iterations pooled (each record counted twice).
    pub pooled_test: MetricReport,
}

fn accuracy(actual: &[Class], predicted: &[Class]) -> f64 {
    let hits = actual.iter().zip(predicted).filter(|(a, p)| a == p).count();
    hits as f64 / actual.len() as f64
}

struct IterationOutcome {
    row: CvIteration,
    test_actual: Vec<Class>,
    test_predicted: Vec<Class>,
}

fn run_iteration(
    cfg: &ExperimentConfig,
    rs: &RecordSet,
    plan: &FoldPlan,
    i: usize,
) -> Result<IterationOutcome, EvalError> {
    let roles = fold_roles(plan, i);
    if roles.test.is_empty() {
        return Err(EvalError::EmptyPhase("test"));
    }
    let clf = train_classifier(cfg, rs, &roles.train)?;
    let (ta, tp) = evaluate(cfg, &clf, rs, &roles.train)?;
    let (sa, sp) = evaluate(cfg, &clf, rs, &roles.test)?;
    let (va, vp) = evaluate(cfg, &clf, rs, &roles.validation)?;
    Ok(IterationOutcome {
        row: CvIteration {
            iteration: i,
            validation_fold: roles.validation_fold,
            test_folds: roles.test_folds,
            sizes: [roles.train.len(), roles.test.len(), roles.validation.len()],
            sigma: clf.sigma(),
            train_accuracy: accuracy(&ta, &tp),
            test_accuracy: accuracy(&sa, &sp),
            validation_accuracy: accuracy(&va, &vp),
            test: MetricReport::compute(&sa, &sp)?,
        },
        test_actual: sa,
        test_predicted: sp,
    })
}

/// Rotating k-fold evaluation. Iterations run on scoped threads and are
/// collected in fold order, so the report does not depend on scheduling.
pub fn run_cv(cfg: &ExperimentConfig, rs: &RecordSet, k: usize) -> Result<CvReport, EvalError> {
    cfg.validate()?;
    let plan = data::make_folds(rs, k, cfg.seed)?;
    let outcomes: Vec<Result<IterationOutcome, EvalError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..k)
            .map(|i| {
                let plan = &plan;
                s.spawn(move || run_iteration(cfg, rs, plan, i))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cross-validation worker panicked"))
            .collect()
    });

    let mut iterations = Vec::with_capacity(k);
    let (mut pooled_a, mut pooled_p) = (Vec::new(), Vec::new());
    for o in outcomes {
        let o = o?;
        pooled_a.extend(o.test_actual);
        pooled_p.extend(o.test_predicted);
        iterations.push(o.row);
    }
    let mean = |f: fn(&CvIteration) -> f64| iterations.iter().map(f).sum::<f64>() / k as f64;
    Ok(CvReport {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        dataset_fingerprint: rs.fingerprint(),
        records: rs.len(),
        k,
        standard_scheme: k == STANDARD_FOLDS,
        mean_train_accuracy: mean(|r| r.train_accuracy),
        mean_test_accuracy: mean(|r| r.test_accuracy),
        mean_validation_accuracy: mean(|r| r.validation_accuracy),
        pooled_test: MetricReport::compute(&pooled_a, &pooled_p)?,
        iterations,
    })
}

impl CvReport {
    pub fn pooled_counts(&self) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for it in &self.iterations {
            cm.merge(&it.test.counts);
        }
        cm
    }
}
