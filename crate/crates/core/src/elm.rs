//! Kernel extreme learning machine.
//!
//! With the hidden layer replaced by a kernel, the output weights solve
//! `((1/C) I + Ω) β = T`, where `Ω[i][j] = K(x_i, x_j)` and `T` holds the
//! ±1-encoded targets. A query is scored as `Σ β_i K(x, x_i)` and labelled
//! by its sign.
//!
//! An SVM is the special case whose hidden functions are `t_i K(x, x_i)`
//! plus a constant bias unit; only the kernel form is executed here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Class;
use crate::numeric::{self, FeatureVector, KernelSpec, NumericError};

#[derive(Debug, Error, PartialEq)]
pub enum ElmError {
    #[error("training set is empty")]
    Empty,
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("regularization c must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    pub training_inputs: Vec<FeatureVector>,
    pub beta: Vec<f64>,
    pub kernel: KernelSpec,
    pub c: f64,
}

impl ElmModel {
    pub fn train(
        inputs: &[FeatureVector],
        labels: &[Class],
        kernel: KernelSpec,
        c: f64,
    ) -> Result<Self, ElmError> {
        if inputs.is_empty() {
            return Err(ElmError::Empty);
        }
        if inputs.len() != labels.len() {
            return Err(ElmError::LengthMismatch {
                inputs: inputs.len(),
                labels: labels.len(),
            });
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(ElmError::InvalidC(c));
        }
        let mut system = numeric::kernel_matrix(&kernel, inputs)?;
        system.add_to_diagonal(1.0 / c);
        let targets: Vec<f64> = labels.iter().map(|l| l.target()).collect();
        let beta = numeric::spd_solve(&system, &targets)?;
        Ok(ElmModel {
            training_inputs: inputs.to_vec(),
            beta,
            kernel,
            c,
        })
    }

    pub fn decision(&self, x: &FeatureVector) -> f64 {
        self.training_inputs
            .iter()
            .zip(&self.beta)
            .map(|(xi, b)| b * self.kernel.eval(x, xi))
            .sum()
    }

    pub fn predict(&self, x: &FeatureVector) -> Class {
        Class::from_decision(self.decision(x))
    }
}
