//! Wisconsin breast-cancer records: parsing, cleaning, CSV round-trip,
//! stratified splits and stratified folds.
//!
//! Raw input is the UCI `breast-cancer-wisconsin.data` layout: eleven
//! comma-separated fields (sample code, nine 1..=10 cytology scores, class
//! 2 or 4) with `?` marking a missing score. Sample codes are not unique in
//! the published file, so every split and fold refers to records by their
//! position inside a [`RecordSet`].

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::numeric::FeatureVector;

pub const N_FEATURES: usize = 9;

/// Display names in file order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "Clump Thickness",
    "Uniformity of Cell Size",
    "Uniformity of Cell Shape",
    "Marginal Adhesion",
    "Single Epithelial Cell Size",
    "Bare Nuclei",
    "Bland Chromatin",
    "Normal Nucleoli",
    "Mitoses",
];

const CSV_HEADER: &str = "id,f1,f2,f3,f4,f5,f6,f7,f8,f9,class";
const LABELED_CSV_HEADER: &str = "id,f1,f2,f3,f4,f5,f6,f7,f8,f9,class,fuzzy_label";

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot build {k} folds from {n} records")]
    TooManyFolds { k: usize, n: usize },
    #[error("empty input")]
    Empty,
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

/// Diagnosis class, encoded 2 (benign) and 4 (malignant) in the data files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Class {
    Benign,
    Malignant,
}

impl Class {
    pub const ALL: [Class; 2] = [Class::Benign, Class::Malignant];

    pub fn code(self) -> u8 {
        match self {
            Class::Benign => 2,
            Class::Malignant => 4,
        }
    }

    pub fn from_code(code: i64) -> Option<Class> {
        match code {
            2 => Some(Class::Benign),
            4 => Some(Class::Malignant),
            _ => None,
        }
    }

    /// Signed training target: benign -1, malignant +1.
    pub fn target(self) -> f64 {
        match self {
            Class::Benign => -1.0,
            Class::Malignant => 1.0,
        }
    }

    /// Sign rule shared by both classifiers; a zero decision is malignant.
    pub fn from_decision(decision: f64) -> Class {
        if decision >= 0.0 {
            Class::Malignant
        } else {
            Class::Benign
        }
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for Class {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        Class::from_code(code as i64).ok_or_else(|| format!("class code {code} is not 2 or 4"))
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One parsed line of the raw file; `None` features were `?`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub line: usize,
    pub id: u64,
    pub features: [Option<u8>; N_FEATURES],
    pub class: Class,
}

impl RawRecord {
    pub fn is_missing(&self) -> bool {
        self.features.iter().any(Option::is_none)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawDataset {
    pub records: Vec<RawRecord>,
}

impl RawDataset {
    pub fn missing_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_missing()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub id: u64,
    pub features: [u8; N_FEATURES],
    pub class: Class,
    /// Set once the record has passed through the fuzzy labeler.
    pub fuzzy_label: Option<Class>,
}

impl Record {
    pub fn new(id: u64, features: [u8; N_FEATURES], class: Class) -> Self {
        Record {
            id,
            features,
            class,
            fuzzy_label: None,
        }
    }

    pub fn feature_vector(&self) -> FeatureVector {
        FeatureVector(self.features.map(f64::from))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Cleaned,
    FuzzyLabeled,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordSet {
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

impl RecordSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_count(&self, class: Class) -> usize {
        self.records.iter().filter(|r| r.class == class).count()
    }

    /// Canonical CSV text. Labeled sets carry an extra `fuzzy_label` column.
    pub fn to_csv(&self) -> String {
        let labeled = self.provenance == Provenance::FuzzyLabeled;
        let mut out = String::with_capacity(self.records.len() * 32);
        out.push_str(if labeled {
            LABELED_CSV_HEADER
        } else {
            CSV_HEADER
        });
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.id.to_string());
            for f in r.features {
                out.push(',');
                out.push_str(&f.to_string());
            }
            out.push(',');
            out.push_str(&r.class.to_string());
            if labeled {
                out.push(',');
                match r.fuzzy_label {
                    Some(c) => out.push_str(&c.to_string()),
                    None => out.push('?'),
                }
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 (hex) of the canonical CSV rendering.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_csv().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Reads either a cleaned/labeled CSV (detected by its header) or a raw
    /// UCI file, which is cleaned on the way in.
    pub fn from_text(text: &str) -> Result<RecordSet, DataError> {
        let first = text.lines().find(|l| !l.trim().is_empty());
        match first {
            None => Err(DataError::Empty),
            Some(l) if l.trim_start().starts_with("id,") => parse_csv(text),
            Some(_) => Ok(clean(&parse_wbcd(text)?)),
        }
    }
}

fn parse_score(field: &str, line: usize, what: &str) -> Result<u8, DataError> {
    let v: i64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: '{field}' is not an integer")))?;
    if !(1..=10).contains(&v) {
        return Err(parse_err(line, format!("{what}: {v} outside [1, 10]")));
    }
    Ok(v as u8)
}

fn parse_class(field: &str, line: usize) -> Result<Class, DataError> {
    let v: i64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("class: '{field}' is not an integer")))?;
    Class::from_code(v).ok_or_else(|| parse_err(line, format!("class {v} is not 2 or 4")))
}

fn parse_id(field: &str, line: usize) -> Result<u64, DataError> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("id: '{field}' is not an integer")))
}

/// Parses the raw UCI layout. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_wbcd(text: &str) -> Result<RawDataset, DataError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != N_FEATURES + 2 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", N_FEATURES + 2, fields.len()),
            ));
        }
        let id = parse_id(fields[0], line)?;
        let mut features = [None; N_FEATURES];
        for (i, f) in fields[1..=N_FEATURES].iter().enumerate() {
            if *f != "?" {
                features[i] = Some(parse_score(f, line, FEATURE_NAMES[i])?);
            }
        }
        let class = parse_class(fields[N_FEATURES + 1], line)?;
        records.push(RawRecord {
            line,
            id,
            features,
            class,
        });
    }
    Ok(RawDataset { records })
}

/// Drops every record with a missing score, preserving order.
pub fn clean(raw: &RawDataset) -> RecordSet {
    let records = raw
        .records
        .iter()
        .filter_map(|r| {
            let mut features = [0u8; N_FEATURES];
            for (dst, src) in features.iter_mut().zip(r.features) {
                *dst = src?;
            }
            Some(Record::new(r.id, features, r.class))
        })
        .collect();
    RecordSet {
        records,
        provenance: Provenance::Cleaned,
    }
}

/// Parses the cleaned (or fuzzy-labeled) CSV written by [`RecordSet::to_csv`].
pub fn parse_csv(text: &str) -> Result<RecordSet, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DataError::Empty)?;
    let labeled = match header.trim() {
        CSV_HEADER => false,
        LABELED_CSV_HEADER => true,
        other => return Err(parse_err(1, format!("unrecognised header '{other}'"))),
    };
    let width = N_FEATURES + 2 + usize::from(labeled);
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.trim().split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let id = parse_id(fields[0], line)?;
        let mut features = [0u8; N_FEATURES];
        for (i, f) in fields[1..=N_FEATURES].iter().enumerate() {
            features[i] = parse_score(f, line, FEATURE_NAMES[i])?;
        }
        let mut record = Record::new(id, features, parse_class(fields[N_FEATURES + 1], line)?);
        if labeled {
            record.fuzzy_label = Some(parse_class(fields[N_FEATURES + 2], line)?);
        }
        records.push(record);
    }
    Ok(RecordSet {
        records,
        provenance: if labeled {
            Provenance::FuzzyLabeled
        } else {
            Provenance::Cleaned
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
    pub validation: f64,
}

impl SplitRatios {
    pub const STANDARD: SplitRatios = SplitRatios {
        train: 0.7,
        test: 0.2,
        validation: 0.1,
    };

    pub fn validate(&self) -> Result<(), DataError> {
        let parts = [self.train, self.test, self.validation];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(DataError::Config(format!(
                "split ratios must be non-negative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::Config(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios::STANDARD
    }
}

/// Disjoint record indices for the three phases, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
    pub ratios: SplitRatios,
    pub seed: u64,
}

fn shuffled_strata(rs: &RecordSet, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    Class::ALL
        .iter()
        .map(|&class| {
            let mut idx: Vec<usize> = (0..rs.len())
                .filter(|&i| rs.records[i].class == class)
                .collect();
            idx.shuffle(rng);
            idx
        })
        .collect()
}

// Guards against products like 0.7 * 30 landing a hair below an integer.
fn floor_share(count: usize, ratio: f64) -> usize {
    ((count as f64) * ratio + 1e-9).floor() as usize
}

/// Stratified split: per class, `floor(n * ratio)` records go to train and
/// test, and the remainder to validation. Shuffling uses ChaCha8 seeded with
/// `seed`.
pub fn split(rs: &RecordSet, ratios: SplitRatios, seed: u64) -> Result<SplitPlan, DataError> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = SplitPlan {
        train: Vec::new(),
        test: Vec::new(),
        validation: Vec::new(),
        ratios,
        seed,
    };
    for stratum in shuffled_strata(rs, &mut rng) {
        let n_train = floor_share(stratum.len(), ratios.train);
        let n_test = floor_share(stratum.len(), ratios.test).min(stratum.len() - n_train);
        plan.train.extend_from_slice(&stratum[..n_train]);
        plan.test
            .extend_from_slice(&stratum[n_train..n_train + n_test]);
        plan.validation
            .extend_from_slice(&stratum[n_train + n_test..]);
    }
    plan.train.sort_unstable();
    plan.test.sort_unstable();
    plan.validation.sort_unstable();
    Ok(plan)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index for each record position.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Record indices of fold `fold`, ascending.
    pub fn members(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified folds: each class is shuffled and dealt round-robin, the deal
/// continuing across classes so fold sizes differ by at most one.
pub fn make_folds(rs: &RecordSet, k: usize, seed: u64) -> Result<FoldPlan, DataError> {
    if k < 3 {
        return Err(DataError::Config(format!(
            "at least 3 folds are needed for train/test/validation roles, got {k}"
        )));
    }
    if k > rs.len() {
        return Err(DataError::TooManyFolds { k, n: rs.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; rs.len()];
    let mut next = 0usize;
    for stratum in shuffled_strata(rs, &mut rng) {
        for idx in stratum {
            assignments[idx] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n_benign: usize, n_malignant: usize) -> RecordSet {
        let mut records = Vec::new();
        for i in 0..n_benign + n_malignant {
            let class = if i < n_benign {
                Class::Benign
            } else {
                Class::Malignant
            };
            let f = (i % 10) as u8 + 1;
            records.push(Record::new(i as u64, [f; N_FEATURES], class));
        }
        RecordSet {
            records,
            provenance: Provenance::Cleaned,
        }
    }

    #[test]
    fn parses_single_line() {
        let raw = parse_wbcd("123,5,1,1,1,2,1,3,1,1,2").unwrap();
        assert_eq!(raw.records.len(), 1);
        let r = &raw.records[0];
        assert_eq!(r.id, 123);
        assert_eq!(r.features, [5, 1, 1, 1, 2, 1, 3, 1, 1].map(Some));
        assert_eq!(r.class, Class::Benign);
        assert!(!r.is_missing());
    }

    #[test]
    fn question_mark_flags_record() {
        let raw = parse_wbcd("124,8,?,8,7,3,4,3,1,1,4\n").unwrap();
        assert!(raw.records[0].is_missing());
        assert_eq!(raw.records[0].features[1], None);
        assert_eq!(raw.missing_count(), 1);
        assert!(clean(&raw).is_empty());
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let text = "1,1,1,1,1,1,1,1,1,1,2\n\n2,1,1,1,1,1,1,1,1,2\n";
        assert!(matches!(
            parse_wbcd(text),
            Err(DataError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_wbcd("1,1,1,1,1,1,11,1,1,1,2"),
            Err(DataError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_wbcd("1,1,1,1,1,1,1,1,1,1,3"),
            Err(DataError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_wbcd("1,1,x,1,1,1,1,1,1,1,2"),
            Err(DataError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_wbcd("1,0,1,1,1,1,1,1,1,1,2"),
            Err(DataError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn clean_without_missing_is_identity() {
        let text = "1,1,2,3,4,5,6,7,8,9,2\n2,10,9,8,7,6,5,4,3,2,4\n";
        let cleaned = clean(&parse_wbcd(text).unwrap());
        assert_eq!(cleaned.len(), 2);
        assert_eq!(cleaned.records[1].features, [10, 9, 8, 7, 6, 5, 4, 3, 2]);
        assert_eq!(cleaned.records[1].class, Class::Malignant);
    }

    #[test]
    fn csv_round_trip_and_detection() {
        let mut rs = synthetic(3, 2);
        let again = RecordSet::from_text(&rs.to_csv()).unwrap();
        assert_eq!(again, rs);
        rs.provenance = Provenance::FuzzyLabeled;
        for r in &mut rs.records {
            r.fuzzy_label = Some(Class::Malignant);
        }
        let again = RecordSet::from_text(&rs.to_csv()).unwrap();
        assert_eq!(again, rs);
        assert_ne!(again.fingerprint(), synthetic(3, 2).fingerprint());
        assert_eq!(RecordSet::from_text("  \n"), Err(DataError::Empty));
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        // 444 and 239 mirror the cleaned class counts.
        let rs = synthetic(444, 239);
        let plan = split(&rs, SplitRatios::STANDARD, 7).unwrap();
        // benign: 310 / 88 / 46, malignant: 167 / 47 / 25
        assert_eq!(plan.train.len(), 477);
        assert_eq!(plan.test.len(), 135);
        assert_eq!(plan.validation.len(), 71);
        let benign_train = plan
            .train
            .iter()
            .filter(|&&i| rs.records[i].class == Class::Benign)
            .count();
        assert_eq!(benign_train, 310);
    }

    #[test]
    fn split_degenerate_and_invalid() {
        let rs = synthetic(5, 4);
        let all = SplitRatios {
            train: 1.0,
            test: 0.0,
            validation: 0.0,
        };
        let plan = split(&rs, all, 1).unwrap();
        assert_eq!(plan.train, (0..9).collect::<Vec<_>>());
        assert!(plan.test.is_empty() && plan.validation.is_empty());
        let bad = SplitRatios {
            train: 0.7,
            test: 0.2,
            validation: 0.2,
        };
        assert!(matches!(split(&rs, bad, 1), Err(DataError::Config(_))));
    }

    #[test]
    fn split_is_deterministic() {
        let rs = synthetic(40, 20);
        let a = split(&rs, SplitRatios::STANDARD, 99).unwrap();
        let b = split(&rs, SplitRatios::STANDARD, 99).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = split(&rs, SplitRatios::STANDARD, 100).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn folds_on_683_records() {
        let rs = synthetic(444, 239);
        let folds = make_folds(&rs, 10, 3).unwrap();
        let mut sizes = folds.sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [68, 68, 68, 68, 68, 68, 68, 69, 69, 69]);
        assert_eq!(folds, make_folds(&rs, 10, 3).unwrap());
    }

    #[test]
    fn folds_boundaries() {
        let rs = synthetic(3, 2);
        let folds = make_folds(&rs, 5, 0).unwrap();
        assert!(folds.sizes().iter().all(|&s| s == 1));
        assert_eq!(
            make_folds(&rs, 6, 0),
            Err(DataError::TooManyFolds { k: 6, n: 5 })
        );
        assert!(matches!(make_folds(&rs, 2, 0), Err(DataError::Config(_))));
    }
}
