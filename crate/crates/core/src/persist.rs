//! Versioned JSON documents for trained models and experiment reports.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! reloaded model reproduces its decisions bit-for-bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elm::ElmModel;
use crate::eval::{
    Classifier, CvReport, ExperimentConfig, PhaseReport, TrainedModel, FORMAT_VERSION,
};
use crate::numeric::{FeatureVector, KernelSpec, NumericError};
use crate::svm::SvmModel;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("inconsistent model document: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

fn label_map() -> BTreeMap<String, i8> {
    BTreeMap::from([("2".to_string(), -1), ("4".to_string(), 1)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElmDocument {
    pub format_version: u32,
    pub c: f64,
    pub sigma: f64,
    pub normalization_flag: bool,
    pub training_inputs: Vec<FeatureVector>,
    pub beta: Vec<f64>,
    pub label_map: BTreeMap<String, i8>,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmDocument {
    pub format_version: u32,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_inputs: Vec<FeatureVector>,
    pub support_targets: Vec<f64>,
    pub c: f64,
    pub tolerance: f64,
    pub sweeps: usize,
    pub normalization_flag: bool,
    pub label_map: BTreeMap<String, i8>,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind")]
pub enum ModelDocument {
    #[serde(rename = "elm-rbf")]
    ElmRbf(ElmDocument),
    #[serde(rename = "svm-linear")]
    SvmLinear(SvmDocument),
}

impl ModelDocument {
    pub fn new(
        clf: &Classifier,
        cfg: &ExperimentConfig,
        dataset_fingerprint: &str,
    ) -> Result<Self, PersistError> {
        Ok(match &clf.model {
            TrainedModel::Elm(m) => ModelDocument::ElmRbf(ElmDocument {
                format_version: FORMAT_VERSION,
                c: m.c,
                sigma: m.kernel.sigma().ok_or_else(|| {
                    PersistError::Inconsistent("elm-rbf model without an rbf kernel".into())
                })?,
                normalization_flag: clf.normalize,
                training_inputs: m.training_inputs.clone(),
                beta: m.beta.clone(),
                label_map: label_map(),
                seed: cfg.seed,
                dataset_fingerprint: dataset_fingerprint.to_string(),
                config: cfg.clone(),
            }),
            TrainedModel::Svm(m) => {
                if m.kernel != KernelSpec::Linear {
                    return Err(PersistError::Inconsistent(
                        "svm-linear documents hold linear-kernel models only".into(),
                    ));
                }
                ModelDocument::SvmLinear(SvmDocument {
                    format_version: FORMAT_VERSION,
                    alphas: m.alphas.clone(),
                    bias: m.bias,
                    support_inputs: m.support_inputs.clone(),
                    support_targets: m.support_targets.clone(),
                    c: m.c,
                    tolerance: m.tolerance,
                    sweeps: m.sweeps,
                    normalization_flag: clf.normalize,
                    label_map: label_map(),
                    seed: m.seed,
                    dataset_fingerprint: dataset_fingerprint.to_string(),
                    config: cfg.clone(),
                })
            }
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PersistError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let found = doc.format_version();
        if found != FORMAT_VERSION {
            return Err(PersistError::Version {
                found,
                expected: FORMAT_VERSION,
            });
        }
        Ok(doc)
    }

    pub fn format_version(&self) -> u32 {
        match self {
            ModelDocument::ElmRbf(d) => d.format_version,
            ModelDocument::SvmLinear(d) => d.format_version,
        }
    }

    pub fn dataset_fingerprint(&self) -> &str {
        match self {
            ModelDocument::ElmRbf(d) => &d.dataset_fingerprint,
            ModelDocument::SvmLinear(d) => &d.dataset_fingerprint,
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        match self {
            ModelDocument::ElmRbf(d) => &d.config,
            ModelDocument::SvmLinear(d) => &d.config,
        }
    }

    pub fn classifier(&self) -> Result<Classifier, PersistError> {
        match self {
            ModelDocument::ElmRbf(d) => {
                if d.beta.len() != d.training_inputs.len() {
                    return Err(PersistError::Inconsistent(format!(
                        "{} coefficients for {} training inputs",
                        d.beta.len(),
                        d.training_inputs.len()
                    )));
                }
                Ok(Classifier {
                    model: TrainedModel::Elm(ElmModel {
                        training_inputs: d.training_inputs.clone(),
                        beta: d.beta.clone(),
                        kernel: KernelSpec::rbf(d.sigma)?,
                        c: d.c,
                    }),
                    normalize: d.normalization_flag,
                })
            }
            ModelDocument::SvmLinear(d) => {
                let n = d.alphas.len();
                if d.support_inputs.len() != n || d.support_targets.len() != n {
                    return Err(PersistError::Inconsistent(
                        "support vector arrays differ in length".into(),
                    ));
                }
                Ok(Classifier {
                    model: TrainedModel::Svm(SvmModel {
                        alphas: d.alphas.clone(),
                        bias: d.bias,
                        support_inputs: d.support_inputs.clone(),
                        support_targets: d.support_targets.clone(),
                        kernel: KernelSpec::Linear,
                        c: d.c,
                        tolerance: d.tolerance,
                        seed: d.seed,
                        sweeps: d.sweeps,
                    }),
                    normalize: d.normalization_flag,
                })
            }
        }
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report_kind", rename_all = "snake_case")]
pub enum ReportDocument {
    Phase(PhaseReport),
    CrossValidation(CvReport),
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PersistError> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        let found = match &doc {
            ReportDocument::Phase(r) => r.format_version,
            ReportDocument::CrossValidation(r) => r.format_version,
        };
        if found != FORMAT_VERSION {
            return Err(PersistError::Version {
                found,
                expected: FORMAT_VERSION,
            });
        }
        Ok(doc)
    }
}
