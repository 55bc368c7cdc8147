#![allow(dead_code)]

use std::path::PathBuf;

use fbcd::data::{Class, RecordSet};
use fbcd::metrics::{ConfusionMatrix, MetricReport};
use fbcd::numeric::{FeatureVector, SymMatrix};
use fbcd::svm;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/breast-cancer-wisconsin.data")
}

pub fn rules_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../rules/default.frs")
}

pub fn raw_text() -> String {
    std::fs::read_to_string(data_path()).expect("dataset present under data/")
}

pub fn wbcd() -> RecordSet {
    RecordSet::from_text(&raw_text()).expect("dataset parses")
}

/// Dense Gaussian elimination with partial pivoting; `None` when a pivot
/// vanishes.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<FeatureVector> {
    (0..n)
        .map(|_| FeatureVector(std::array::from_fn(|_| rng.gen_range(1..=10) as f64)))
        .collect()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<Class> {
    loop {
        let labels: Vec<Class> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Class::Malignant
                } else {
                    Class::Benign
                }
            })
            .collect();
        if labels.contains(&Class::Benign) && labels.contains(&Class::Malignant) {
            return labels;
        }
    }
}

/// Best dual value over every active set: each multiplier is pinned at 0,
/// pinned at C, or free, and the free ones solve the stationarity system
/// `(Qα)_i + t_i b = 1` together with `Σ t_i α_i = 0`.
pub fn active_set_optimum(gram: &SymMatrix, t: &[f64], c: f64) -> f64 {
    let n = t.len();
    let q = |i: usize, j: usize| t[i] * t[j] * gram.get(i, j);
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in &mut state {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = q(i, j);
                }
                a[r][m] = t[i];
                b[r] = 1.0
                    - (0..n)
                        .filter(|&j| state[j] == 1)
                        .map(|j| q(i, j) * c)
                        .sum::<f64>();
            }
            for (s, &j) in free.iter().enumerate() {
                a[m][s] = t[j];
            }
            b[m] = -(0..n)
                .filter(|&j| state[j] == 1)
                .map(|j| t[j] * c)
                .sum::<f64>();
            let Some(sol) = gauss_solve(a, b) else {
                continue;
            };
            if free
                .iter()
                .enumerate()
                .any(|(r, _)| sol[r] < -1e-12 || sol[r] > c + 1e-12)
            {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let balance: f64 = alpha.iter().zip(t).map(|(a, t)| a * t).sum();
        if balance.abs() > 1e-9 {
            continue;
        }
        best = best.max(svm::dual_objective(gram, t, &alpha));
    }
    best
}

fn code(c: Class) -> f64 {
    if c == Class::Malignant {
        4.0
    } else {
        2.0
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

fn ensure(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{what} differs from the naive loop"))
    }
}

/// Recomputes every report field with plain loops; exact equality expected.
pub fn naive_check(
    actual: &[Class],
    predicted: &[Class],
    report: &MetricReport,
) -> Result<(), String> {
    let n = actual.len();
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        match (actual[i], predicted[i]) {
            (Class::Malignant, Class::Malignant) => tp += 1,
            (Class::Benign, Class::Malignant) => fp += 1,
            (Class::Malignant, Class::Benign) => fn_ += 1,
            (Class::Benign, Class::Benign) => tn += 1,
        }
    }
    ensure(
        report.counts == ConfusionMatrix { tp, fp, fn_, tn },
        "counts",
    )?;

    let mut sse = 0.0;
    let mut ape = 0.0;
    for i in 0..n {
        let (a, p) = (code(actual[i]), code(predicted[i]));
        sse += (a - p) * (a - p);
        ape += ((a - p) / a).abs();
    }
    ensure(report.rmse == (sse / n as f64).sqrt(), "rmse")?;
    ensure(report.mape == 100.0 * ape / n as f64, "mape")?;

    let mut sum_a = 0.0;
    let mut sum_p = 0.0;
    for i in 0..n {
        sum_a += code(actual[i]);
        sum_p += code(predicted[i]);
    }
    let (ma, mp) = (sum_a / n as f64, sum_p / n as f64);
    let (mut cov, mut va, mut vp) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, dp) = (code(actual[i]) - ma, code(predicted[i]) - mp);
        cov += da * dp;
        va += da * da;
        vp += dp * dp;
    }
    let r = (va != 0.0 && vp != 0.0).then(|| (cov / (va * vp).sqrt()).clamp(-1.0, 1.0));
    ensure(report.r.value() == r, "r")?;
    ensure(report.r_squared.value() == r.map(|r| r * r), "r_squared")?;

    let sens = ratio(tp, tp + fn_);
    let spec = ratio(tn, tn + fp);
    let prec = ratio(tp, tp + fp);
    ensure(
        report.rates.accuracy.value() == ratio(tp + tn, n as u64),
        "accuracy",
    )?;
    ensure(report.rates.sensitivity.value() == sens, "sensitivity")?;
    ensure(report.rates.specificity.value() == spec, "specificity")?;
    ensure(report.rates.precision.value() == prec, "precision")?;
    let f = match (prec, sens) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        _ => None,
    };
    ensure(report.rates.f_measure.value() == f, "f_measure")?;
    ensure(report.rates.fpr.value() == spec.map(|s| 1.0 - s), "fpr")?;
    ensure(report.rates.fnr.value() == sens.map(|s| 1.0 - s), "fnr")?;
    Ok(())
}
