//! Mamdani fuzzy expert system used to relabel records.
//!
//! Each of the nine scores is fuzzified into Low / High (plus Medium for
//! Clump Thickness and Normal Nucleoli). Rules combine clauses with AND = min
//! and OR = max; a rule's activation (scaled by its weight) clips its class
//! triangle on the selector domain [1, 5], clipped sets are max-aggregated,
//! and the centroid of the aggregate decides the label: below 3 is benign,
//! 3 and above malignant.

mod dsl;
mod membership;

use serde::Serialize;
use thiserror::Error;

pub use dsl::parse_rules;
pub use membership::{membership, Feature, MembershipSpec, Term};

use crate::data::{Class, Provenance, RecordSet, N_FEATURES};

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: {inner}")]
    At {
        line: usize,
        col: usize,
        inner: Box<FuzzyError>,
    },
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("unknown term '{0}'")]
    UnknownTerm(String),
    #[error("term {term} undefined for {feature}")]
    UndefinedTerm { feature: Feature, term: Term },
    #[error("rule weight {0} outside (0, 1]")]
    InvalidWeight(f64),
    #[error("duplicate rule name '{0}'")]
    DuplicateRule(String),
    #[error("rule base is empty")]
    EmptyRuleBase,
    #[error("no rule fired for record(s) {ids:?}")]
    NoRuleFired { ids: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Clause { feature: Feature, term: Term },
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    /// Builds a conjunction, flattening nested conjunctions.
    pub fn and(parts: Vec<Expr>) -> Expr {
        Self::flatten(parts, true)
    }

    pub fn or(parts: Vec<Expr>) -> Expr {
        Self::flatten(parts, false)
    }

    fn flatten(parts: Vec<Expr>, conj: bool) -> Expr {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Expr::And(inner) if conj => flat.extend(inner),
                Expr::Or(inner) if !conj => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if conj {
            Expr::And(flat)
        } else {
            Expr::Or(flat)
        }
    }

    pub fn degree(&self, scores: &[f64; N_FEATURES]) -> f64 {
        match self {
            Expr::Clause { feature, term } => MembershipSpec::lookup(*feature, *term)
                .map(|m| m.degree(scores[feature.index()]))
                .unwrap_or(0.0),
            Expr::And(parts) => parts.iter().map(|p| p.degree(scores)).fold(1.0, f64::min),
            Expr::Or(parts) => parts.iter().map(|p| p.degree(scores)).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: String,
    pub antecedent: Expr,
    pub consequent: Class,
    pub weight: f64,
}

/// Triangle (left foot, peak, right foot) on the selector domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Triangle(pub f64, pub f64, pub f64);

impl Triangle {
    pub fn degree(&self, x: f64) -> f64 {
        let Triangle(a, b, c) = *self;
        if x <= a || x >= c {
            0.0
        } else if x <= b {
            (x - a) / (b - a)
        } else {
            (c - x) / (c - b)
        }
    }
}

pub const BENIGN_SET: Triangle = Triangle(1.0, 2.0, 3.0);
pub const MALIGNANT_SET: Triangle = Triangle(3.0, 4.0, 5.0);

/// Samples on [1, 5] with step 0.01.
pub const GRID_POINTS: usize = 401;

/// Centroids within this distance of 3 count as the tie and go malignant.
const TIE_EPS: f64 = 1e-9;

fn grid_x(i: usize) -> f64 {
    (100 + i) as f64 / 100.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleBase {
    pub rules: Vec<Rule>,
    pub benign_set: Triangle,
    pub malignant_set: Triangle,
}

impl RuleBase {
    pub fn new(rules: Vec<Rule>) -> Result<Self, FuzzyError> {
        if rules.is_empty() {
            return Err(FuzzyError::EmptyRuleBase);
        }
        Ok(RuleBase {
            rules,
            benign_set: BENIGN_SET,
            malignant_set: MALIGNANT_SET,
        })
    }

    /// Classes with no rule concluding them.
    pub fn uncovered_classes(&self) -> Vec<Class> {
        Class::ALL
            .into_iter()
            .filter(|c| !self.rules.iter().any(|r| r.consequent == *c))
            .collect()
    }

    pub fn infer(&self, scores: &[f64; N_FEATURES]) -> Result<ActivationProfile, FuzzyError> {
        if self.rules.is_empty() {
            return Err(FuzzyError::EmptyRuleBase);
        }
        let (mut benign, mut malignant) = (0.0f64, 0.0f64);
        for rule in &self.rules {
            let a = rule.weight * rule.antecedent.degree(scores);
            match rule.consequent {
                Class::Benign => benign = benign.max(a),
                Class::Malignant => malignant = malignant.max(a),
            }
        }
        let sample = |set: Triangle, h: f64| -> Vec<f64> {
            (0..GRID_POINTS)
                .map(|i| set.degree(grid_x(i)).min(h))
                .collect()
        };
        Ok(ActivationProfile {
            benign_activation: benign,
            malignant_activation: malignant,
            benign: sample(self.benign_set, benign),
            malignant: sample(self.malignant_set, malignant),
        })
    }

    pub fn classify(&self, scores: &[f64; N_FEATURES]) -> Result<(f64, Class), FuzzyError> {
        defuzzify(&self.infer(scores)?)
    }
}

/// Clipped output sets per class, sampled on the selector grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationProfile {
    pub benign_activation: f64,
    pub malignant_activation: f64,
    pub benign: Vec<f64>,
    pub malignant: Vec<f64>,
}

impl ActivationProfile {
    pub fn aggregated(&self) -> impl Iterator<Item = f64> + '_ {
        self.benign
            .iter()
            .zip(&self.malignant)
            .map(|(b, m)| b.max(*m))
    }
}

/// Centroid of the aggregated set and the label it implies.
pub fn defuzzify(profile: &ActivationProfile) -> Result<(f64, Class), FuzzyError> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, mu) in profile.aggregated().enumerate() {
        num += grid_x(i) * mu;
        den += mu;
    }
    if den <= 0.0 {
        return Err(FuzzyError::NoRuleFired { ids: Vec::new() });
    }
    let crisp = num / den;
    let label = if crisp < 3.0 - TIE_EPS {
        Class::Benign
    } else {
        Class::Malignant
    };
    Ok((crisp, label))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelSummary {
    pub records: usize,
    pub agreeing: usize,
    /// `None` for an empty set.
    pub agreement: Option<f64>,
    pub benign_labels: usize,
    pub malignant_labels: usize,
}

/// Labels every record; any record on which no rule fires fails the whole
/// call, reporting all such ids.
pub fn label_set(rb: &RuleBase, rs: &RecordSet) -> Result<(RecordSet, LabelSummary), FuzzyError> {
    let mut out = rs.clone();
    out.provenance = Provenance::FuzzyLabeled;
    let mut silent = Vec::new();
    for r in &mut out.records {
        match rb.classify(&r.features.map(f64::from)) {
            Ok((_, label)) => r.fuzzy_label = Some(label),
            Err(FuzzyError::NoRuleFired { .. }) => silent.push(r.id),
            Err(e) => return Err(e),
        }
    }
    if !silent.is_empty() {
        return Err(FuzzyError::NoRuleFired { ids: silent });
    }
    let agreeing = out
        .records
        .iter()
        .filter(|r| r.fuzzy_label == Some(r.class))
        .count();
    let malignant_labels = out
        .records
        .iter()
        .filter(|r| r.fuzzy_label == Some(Class::Malignant))
        .count();
    let summary = LabelSummary {
        records: out.len(),
        agreeing,
        agreement: (!out.is_empty()).then(|| agreeing as f64 / out.len() as f64),
        benign_labels: out.len() - malignant_labels,
        malignant_labels,
    };
    Ok((out, summary))
}
