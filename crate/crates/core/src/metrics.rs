//! Regression-style errors over class codes and confusion-matrix rates.
//!
//! RMSE, correlation and MAPE are computed on the raw class codes {2, 4},
//! which keeps MAPE's division by the actual value well defined. The
//! positive class of the confusion matrix is malignant.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Class;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("empty input")]
    Empty,
    #[error("correlation undefined: a sequence has zero variance")]
    ZeroVariance,
    #[error("percentage error undefined: actual value at index {0} is zero")]
    ZeroActual(usize),
    #[error("invalid class code {0}")]
    InvalidLabel(i64),
}

fn check_lengths(actual: usize, predicted: usize) -> Result<(), MetricError> {
    if actual != predicted {
        return Err(MetricError::LengthMismatch { actual, predicted });
    }
    if actual == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual.len(), predicted.len())?;
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

/// Pearson correlation `r` and its square.
pub fn correlation_and_r2(actual: &[f64], predicted: &[f64]) -> Result<(f64, f64), MetricError> {
    check_lengths(actual.len(), predicted.len())?;
    let n = actual.len() as f64;
    let mean_a = actual.iter().sum::<f64>() / n;
    let mean_p = predicted.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_p) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let (da, dp) = (a - mean_a, p - mean_p);
        cov += da * dp;
        var_a += da * da;
        var_p += dp * dp;
    }
    if var_a == 0.0 || var_p == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    let r = (cov / (var_a * var_p).sqrt()).clamp(-1.0, 1.0);
    Ok((r, r * r))
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check_lengths(actual.len(), predicted.len())?;
    let mut sum = 0.0;
    for (i, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if *a == 0.0 {
            return Err(MetricError::ZeroActual(i));
        }
        sum += ((a - p) / a).abs();
    }
    Ok(100.0 * sum / actual.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, actual: Class, predicted: Class) {
        match (actual, predicted) {
            (Class::Malignant, Class::Malignant) => self.tp += 1,
            (Class::Benign, Class::Malignant) => self.fp += 1,
            (Class::Malignant, Class::Benign) => self.fn_ += 1,
            (Class::Benign, Class::Benign) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

pub fn confusion(actual: &[Class], predicted: &[Class]) -> Result<ConfusionMatrix, MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        cm.record(*a, *p);
    }
    Ok(cm)
}

/// Same as [`confusion`] for untyped class codes.
pub fn confusion_from_codes(
    actual: &[i64],
    predicted: &[i64],
) -> Result<ConfusionMatrix, MetricError> {
    let decode = |codes: &[i64]| -> Result<Vec<Class>, MetricError> {
        codes
            .iter()
            .map(|&c| Class::from_code(c).ok_or(MetricError::InvalidLabel(c)))
            .collect()
    };
    confusion(&decode(actual)?, &decode(predicted)?)
}

/// A ratio that is undefined when its denominator is zero. Serialized as a
/// number, or the string `"undefined"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate(pub Option<f64>);

impl Rate {
    pub const UNDEFINED: Rate = Rate(None);

    fn ratio(num: u64, den: u64) -> Rate {
        if den == 0 {
            Rate(None)
        } else {
            Rate(Some(num as f64 / den as f64))
        }
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    fn complement(self) -> Rate {
        Rate(self.0.map(|v| 1.0 - v))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            None => f.write_str("undefined"),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Rate(Some(v))),
            Repr::Text(t) if t == "undefined" => Ok(Rate(None)),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad rate '{t}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: Rate,
    pub precision: Rate,
    pub sensitivity: Rate,
    pub specificity: Rate,
    pub f_measure: Rate,
    pub fpr: Rate,
    pub fnr: Rate,
}

pub fn derive(cm: &ConfusionMatrix) -> Rates {
    let sensitivity = Rate::ratio(cm.tp, cm.tp + cm.fn_);
    let specificity = Rate::ratio(cm.tn, cm.tn + cm.fp);
    let precision = Rate::ratio(cm.tp, cm.tp + cm.fp);
    let f_measure = match (precision.0, sensitivity.0) {
        (Some(p), Some(r)) if p + r > 0.0 => Rate(Some(2.0 * p * r / (p + r))),
        _ => Rate::UNDEFINED,
    };
    Rates {
        accuracy: Rate::ratio(cm.tp + cm.tn, cm.total()),
        precision,
        sensitivity,
        specificity,
        f_measure,
        fpr: specificity.complement(),
        fnr: sensitivity.complement(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub rmse: f64,
    /// Pearson correlation between actual and predicted codes.
    pub r: Rate,
    /// `r²`, printed as R² in tables.
    pub r_squared: Rate,
    /// Percent.
    pub mape: f64,
    #[serde(flatten)]
    pub rates: Rates,
    pub counts: ConfusionMatrix,
}

impl MetricReport {
    pub fn compute(actual: &[Class], predicted: &[Class]) -> Result<Self, MetricError> {
        let a: Vec<f64> = actual.iter().map(|c| f64::from(c.code())).collect();
        let p: Vec<f64> = predicted.iter().map(|c| f64::from(c.code())).collect();
        let counts = confusion(actual, predicted)?;
        let (r, r_squared) = match correlation_and_r2(&a, &p) {
            Ok((r, r2)) => (Rate(Some(r)), Rate(Some(r2))),
            Err(MetricError::ZeroVariance) => (Rate::UNDEFINED, Rate::UNDEFINED),
            Err(e) => return Err(e),
        };
        Ok(MetricReport {
            n: actual.len(),
            rmse: rmse(&a, &p)?,
            r,
            r_squared,
            mape: mape(&a, &p)?,
            rates: derive(&counts),
            counts,
        })
    }
}
