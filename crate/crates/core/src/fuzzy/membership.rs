use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FuzzyError;
use crate::data::N_FEATURES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    ClumpThickness,
    UniformityCellSize,
    UniformityCellShape,
    MarginalAdhesion,
    SingleEpithelialCellSize,
    BareNuclei,
    BlandChromatin,
    NormalNucleoli,
    Mitoses,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::ClumpThickness,
        Feature::UniformityCellSize,
        Feature::UniformityCellShape,
        Feature::MarginalAdhesion,
        Feature::SingleEpithelialCellSize,
        Feature::BareNuclei,
        Feature::BlandChromatin,
        Feature::NormalNucleoli,
        Feature::Mitoses,
    ];

    /// Column position in a record.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Identifier used in rule files.
    pub fn name(self) -> &'static str {
        match self {
            Feature::ClumpThickness => "ClumpThickness",
            Feature::UniformityCellSize => "UniformityCellSize",
            Feature::UniformityCellShape => "UniformityCellShape",
            Feature::MarginalAdhesion => "MarginalAdhesion",
            Feature::SingleEpithelialCellSize => "SingleEpithelialCellSize",
            Feature::BareNuclei => "BareNuclei",
            Feature::BlandChromatin => "BlandChromatin",
            Feature::NormalNucleoli => "NormalNucleoli",
            Feature::Mitoses => "Mitoses",
        }
    }

    /// Linguistic terms defined for this feature.
    pub fn terms(self) -> &'static [Term] {
        match self {
            Feature::ClumpThickness | Feature::NormalNucleoli => {
                &[Term::Low, Term::Medium, Term::High]
            }
            _ => &[Term::Low, Term::High],
        }
    }

    pub fn has_term(self, term: Term) -> bool {
        self.terms().contains(&term)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| FuzzyError::UnknownFeature(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Low,
    Medium,
    High,
}

impl Term {
    pub fn name(self) -> &'static str {
        match self {
            Term::Low => "Low",
            Term::Medium => "Medium",
            Term::High => "High",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Term {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Low" => Ok(Term::Low),
            "Medium" => Ok(Term::Medium),
            "High" => Ok(Term::High),
            other => Err(FuzzyError::UnknownTerm(other.to_string())),
        }
    }
}

/// Piecewise-linear membership function over the score domain [1, 10],
/// held constant beyond its first and last breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipSpec {
    pub feature: Feature,
    pub term: Term,
    pub breakpoints: &'static [(f64, f64)],
}

// Two-term features cross over on [3, 7].
const TWO_LOW: &[(f64, f64)] = &[(1.0, 1.0), (3.0, 1.0), (7.0, 0.0), (10.0, 0.0)];
const TWO_HIGH: &[(f64, f64)] = &[(1.0, 0.0), (3.0, 0.0), (7.0, 1.0), (10.0, 1.0)];
// Three-term features: shoulders at 2 and 8, Medium peaks at 5.
const THREE_LOW: &[(f64, f64)] = &[(1.0, 1.0), (2.0, 1.0), (5.0, 0.0), (10.0, 0.0)];
const THREE_MEDIUM: &[(f64, f64)] = &[(1.0, 0.0), (2.0, 0.0), (5.0, 1.0), (8.0, 0.0), (10.0, 0.0)];
const THREE_HIGH: &[(f64, f64)] = &[(1.0, 0.0), (5.0, 0.0), (8.0, 1.0), (10.0, 1.0)];

impl MembershipSpec {
    pub fn lookup(feature: Feature, term: Term) -> Result<Self, FuzzyError> {
        let three = feature.terms().len() == 3;
        let breakpoints = match (three, term) {
            (false, Term::Low) => TWO_LOW,
            (false, Term::High) => TWO_HIGH,
            (true, Term::Low) => THREE_LOW,
            (true, Term::Medium) => THREE_MEDIUM,
            (true, Term::High) => THREE_HIGH,
            (false, Term::Medium) => return Err(FuzzyError::UndefinedTerm { feature, term }),
        };
        Ok(MembershipSpec {
            feature,
            term,
            breakpoints,
        })
    }

    pub fn degree(&self, x: f64) -> f64 {
        piecewise_linear(self.breakpoints, x)
    }
}

pub(crate) fn piecewise_linear(points: &[(f64, f64)], x: f64) -> f64 {
    let (first, last) = (points[0], points[points.len() - 1]);
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    last.1
}

/// Degree of `x` in `term` of `feature`.
pub fn membership(feature: Feature, term: Term, x: f64) -> Result<f64, FuzzyError> {
    Ok(MembershipSpec::lookup(feature, term)?.degree(x))
}
