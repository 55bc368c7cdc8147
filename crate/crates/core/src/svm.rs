//! Binary SVM trained on the dual problem by simplified SMO.
//!
//! The dual is
//!
//! ```text
//! max  Σ α_i - ½ Σ_i Σ_j α_i α_j t_i t_j K(x_i, x_j)
//! s.t. Σ α_i t_i = 0,  0 ≤ α_i ≤ C
//! ```
//!
//! and the decision value is `Σ α_i t_i K(x, x_i) + b`. The solver repeatedly
//! sweeps the training set, pairs each KKT violator with a partner chosen by
//! the usual second-choice heuristic (largest error gap, then a scan from a
//! seeded random offset) and optimizes the pair analytically. It stops after `max_passes`
//! consecutive sweeps without an update, then recomputes the bias as the
//! average over unbounded support vectors and re-checks KKT; sweeping resumes
//! if that bias exposes a violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Class;
use crate::numeric::{self, FeatureVector, KernelSpec, NumericError, SymMatrix};

/// Minimum change in a multiplier for a pair update to count.
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("box constraint c must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("invalid SMO settings: {0}")]
    InvalidSettings(String),
    #[error("SMO did not converge after {passes} passes (max KKT violation {violation:e})")]
    NotConverged { passes: usize, violation: f64 },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoSettings {
    /// KKT violation threshold.
    pub tolerance: f64,
    /// Consecutive update-free sweeps required to stop.
    pub max_passes: usize,
    /// Seeds the partner choice.
    pub seed: u64,
    /// Hard cap on total sweeps.
    pub max_sweeps: usize,
}

impl Default for SmoSettings {
    fn default() -> Self {
        SmoSettings {
            tolerance: 1e-3,
            max_passes: 10,
            seed: 0,
            max_sweeps: 100_000,
        }
    }
}

impl SmoSettings {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(SvmError::InvalidSettings(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 || self.max_sweeps == 0 {
            return Err(SvmError::InvalidSettings(
                "max_passes and max_sweeps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Multipliers of the support vectors, all in (0, c].
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_inputs: Vec<FeatureVector>,
    /// ±1 per support vector.
    pub support_targets: Vec<f64>,
    pub kernel: KernelSpec,
    pub c: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Sweeps the solver used.
    pub sweeps: usize,
}

struct Smo<'a> {
    gram: &'a SymMatrix,
    targets: &'a [f64],
    c: f64,
    alphas: Vec<f64>,
    bias: f64,
    /// `f(x_i) - t_i` for every training point.
    errors: Vec<f64>,
}

impl Smo<'_> {
    fn violation(&self, i: usize) -> f64 {
        let r = self.targets[i] * self.errors[i];
        let a = self.alphas[i];
        if a <= 0.0 {
            (-r).max(0.0)
        } else if a >= self.c {
            r.max(0.0)
        } else {
            r.abs()
        }
    }

    fn max_violation(&self) -> f64 {
        (0..self.alphas.len())
            .map(|i| self.violation(i))
            .fold(0.0, f64::max)
    }

    fn clamp(&self, a: f64) -> f64 {
        if a < 1e-12 * self.c {
            0.0
        } else if a > self.c * (1.0 - 1e-12) {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (ti, tj) = (self.targets[i], self.targets[j]);
        let (ai_old, aj_old) = (self.alphas[i], self.alphas[j]);
        let (lo, hi) = if ti != tj {
            (
                (aj_old - ai_old).max(0.0),
                (self.c + aj_old - ai_old).min(self.c),
            )
        } else {
            (
                (ai_old + aj_old - self.c).max(0.0),
                (ai_old + aj_old).min(self.c),
            )
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let (kii, kjj, kij) = (
            self.gram.get(i, i),
            self.gram.get(j, j),
            self.gram.get(i, j),
        );
        let eta = 2.0 * kij - kii - kjj;
        if eta >= 0.0 {
            return false;
        }
        let (ei, ej) = (self.errors[i], self.errors[j]);
        let aj = self.clamp((aj_old - tj * (ei - ej) / eta).clamp(lo, hi));
        if (aj - aj_old).abs() < MIN_STEP * (1.0 + aj + aj_old) {
            return false;
        }
        let ai = self.clamp(ai_old + ti * tj * (aj_old - aj));
        let (dai, daj) = (ai - ai_old, aj - aj_old);

        let b1 = self.bias - ei - ti * dai * kii - tj * daj * kij;
        let b2 = self.bias - ej - ti * dai * kij - tj * daj * kjj;
        let bias = if ai > 0.0 && ai < self.c {
            b1
        } else if aj > 0.0 && aj < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = bias - self.bias;
        let (row_i, row_j) = (self.gram.row(i), self.gram.row(j));
        for (k, e) in self.errors.iter_mut().enumerate() {
            *e += ti * dai * row_i[k] + tj * daj * row_j[k] + db;
        }
        self.alphas[i] = ai;
        self.alphas[j] = aj;
        self.bias = bias;
        true
    }

    /// Average of `t_i - s_i` over unbounded support vectors, where `s_i` is
    /// the kernel part of the decision; midpoint of the feasible interval
    /// when every multiplier sits at a bound.
    fn settled_bias(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.alphas.len() {
            // t_i - s_i = bias - error_i
            let implied = self.bias - self.errors[i];
            let (a, t) = (self.alphas[i], self.targets[i]);
            if a > 0.0 && a < self.c {
                sum += implied;
                count += 1;
            } else if (a <= 0.0) == (t > 0.0) {
                lower = lower.max(implied);
            } else {
                upper = upper.min(implied);
            }
        }
        if count > 0 {
            sum / count as f64
        } else if lower.is_finite() && upper.is_finite() {
            0.5 * (lower + upper)
        } else if lower.is_finite() {
            lower
        } else if upper.is_finite() {
            upper
        } else {
            self.bias
        }
    }

    fn is_free(&self, k: usize) -> bool {
        self.alphas[k] > 0.0 && self.alphas[k] < self.c
    }

    /// Pairs violator `i` with a partner: the free multiplier maximizing
    /// `|E_i - E_j|` first, then every free multiplier, then every point, the
    /// last two scanned from a random offset.
    fn examine(&mut self, i: usize, rng: &mut ChaCha8Rng) -> bool {
        let n = self.alphas.len();
        let ei = self.errors[i];
        let best = (0..n)
            .filter(|&k| k != i && self.is_free(k))
            .max_by(|&a, &b| {
                let da = (ei - self.errors[a]).abs();
                let db = (ei - self.errors[b]).abs();
                da.total_cmp(&db)
            });
        if let Some(j) = best {
            if self.take_step(i, j) {
                return true;
            }
        }
        for free_only in [true, false] {
            let start = rng.gen_range(0..n);
            for off in 0..n {
                let j = (start + off) % n;
                if j == i || Some(j) == best || (free_only && !self.is_free(j)) {
                    continue;
                }
                if !free_only && self.is_free(j) {
                    continue;
                }
                if self.take_step(i, j) {
                    return true;
                }
            }
        }
        false
    }

    /// Recomputes the error cache from scratch, discarding drift from the
    /// incremental updates.
    fn refresh_errors(&mut self) {
        let coef: Vec<f64> = self
            .alphas
            .iter()
            .zip(self.targets)
            .map(|(a, t)| a * t)
            .collect();
        let kc = self.gram.mul_vec(&coef);
        for (i, e) in self.errors.iter_mut().enumerate() {
            *e = kc[i] + self.bias - self.targets[i];
        }
    }

    fn set_bias(&mut self, bias: f64) {
        let db = bias - self.bias;
        for e in &mut self.errors {
            *e += db;
        }
        self.bias = bias;
    }
}

impl SvmModel {
    pub fn train(
        inputs: &[FeatureVector],
        labels: &[Class],
        kernel: KernelSpec,
        c: f64,
        settings: &SmoSettings,
    ) -> Result<Self, SvmError> {
        if inputs.len() != labels.len() {
            return Err(SvmError::LengthMismatch {
                inputs: inputs.len(),
                labels: labels.len(),
            });
        }
        if !(labels.contains(&Class::Benign) && labels.contains(&Class::Malignant)) {
            return Err(SvmError::SingleClass);
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(SvmError::InvalidC(c));
        }
        settings.validate()?;

        let gram = numeric::kernel_matrix(&kernel, inputs)?;
        let targets: Vec<f64> = labels.iter().map(|l| l.target()).collect();
        let solution = solve_dual(&gram, &targets, c, settings)?;
        Ok(SvmModel::from_solution(
            inputs, &targets, &solution, kernel, c, settings,
        ))
    }

    /// Keeps only the points with a positive multiplier.
    pub fn from_solution(
        inputs: &[FeatureVector],
        targets: &[f64],
        solution: &DualSolution,
        kernel: KernelSpec,
        c: f64,
        settings: &SmoSettings,
    ) -> Self {
        let mut model = SvmModel {
            alphas: Vec::new(),
            bias: solution.bias,
            support_inputs: Vec::new(),
            support_targets: Vec::new(),
            kernel,
            c,
            tolerance: settings.tolerance,
            seed: settings.seed,
            sweeps: solution.sweeps,
        };
        for (i, &a) in solution.alphas.iter().enumerate() {
            if a > 0.0 {
                model.alphas.push(a);
                model.support_inputs.push(inputs[i]);
                model.support_targets.push(targets[i]);
            }
        }
        model
    }

    pub fn decision(&self, x: &FeatureVector) -> f64 {
        self.support_inputs
            .iter()
            .zip(self.alphas.iter().zip(&self.support_targets))
            .map(|(xi, (a, t))| a * t * self.kernel.eval(x, xi))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &FeatureVector) -> Class {
        Class::from_decision(self.decision(x))
    }

    /// `w = Σ α_i t_i x_i`, available for the linear kernel only.
    pub fn weights(&self) -> Option<FeatureVector> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let mut w = [0.0; crate::data::N_FEATURES];
        for (x, (a, t)) in self
            .support_inputs
            .iter()
            .zip(self.alphas.iter().zip(&self.support_targets))
        {
            for (wk, xk) in w.iter_mut().zip(x.0) {
                *wk += a * t * xk;
            }
        }
        Some(FeatureVector(w))
    }

    /// `‖w‖²` in feature space, `Σ_ij α_i α_j t_i t_j K(x_i, x_j)`.
    fn weight_norm_sq(&self) -> f64 {
        let coef: Vec<f64> = self
            .alphas
            .iter()
            .zip(&self.support_targets)
            .map(|(a, t)| a * t)
            .collect();
        let mut s = 0.0;
        for (i, xi) in self.support_inputs.iter().enumerate() {
            for (j, xj) in self.support_inputs.iter().enumerate() {
                s += coef[i] * coef[j] * self.kernel.eval(xi, xj);
            }
        }
        s
    }

    pub fn dual_objective(&self) -> f64 {
        self.alphas.iter().sum::<f64>() - 0.5 * self.weight_norm_sq()
    }

    /// `½‖w‖² + C Σ max(0, 1 - t_i f(x_i))`; never below the dual value.
    pub fn primal_objective(&self, inputs: &[FeatureVector], labels: &[Class]) -> f64 {
        let slack: f64 = inputs
            .iter()
            .zip(labels)
            .map(|(x, l)| (1.0 - l.target() * self.decision(x)).max(0.0))
            .sum();
        0.5 * self.weight_norm_sq() + self.c * slack
    }
}

/// Multipliers for every training point (zeros included) plus the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub sweeps: usize,
}

/// Runs simplified SMO over a precomputed Gram matrix and ±1 targets.
pub fn solve_dual(
    gram: &SymMatrix,
    targets: &[f64],
    c: f64,
    settings: &SmoSettings,
) -> Result<DualSolution, SvmError> {
    let n = targets.len();
    let mut smo = Smo {
        gram,
        targets,
        c,
        alphas: vec![0.0; n],
        bias: 0.0,
        errors: targets.iter().map(|t| -t).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let tol = settings.tolerance;
    let mut sweeps = 0usize;
    loop {
        let mut quiet = 0usize;
        while quiet < settings.max_passes {
            if sweeps == settings.max_sweeps {
                return Err(SvmError::NotConverged {
                    passes: sweeps,
                    violation: smo.max_violation(),
                });
            }
            sweeps += 1;
            let mut changed = 0usize;
            for i in 0..n {
                if smo.violation(i) > tol && smo.examine(i, &mut rng) {
                    changed += 1;
                }
            }
            quiet = if changed == 0 { quiet + 1 } else { 0 };
        }
        smo.refresh_errors();
        let bias = smo.settled_bias();
        smo.set_bias(bias);
        if smo.max_violation() <= tol {
            break;
        }
    }
    Ok(DualSolution {
        alphas: smo.alphas,
        bias: smo.bias,
        sweeps,
    })
}

/// `Σ α_i - ½ αᵀ Q α` with `Q_ij = t_i t_j K_ij`.
pub fn dual_objective(gram: &SymMatrix, targets: &[f64], alphas: &[f64]) -> f64 {
    let coef: Vec<f64> = alphas.iter().zip(targets).map(|(a, t)| a * t).collect();
    let kc = gram.mul_vec(&coef);
    alphas.iter().sum::<f64>() - 0.5 * coef.iter().zip(&kc).map(|(a, b)| a * b).sum::<f64>()
}

/// Largest KKT violation of `(alphas, bias)`:
/// `α = 0` needs `t f ≥ 1`, `0 < α < C` needs `t f = 1`, `α = C` needs `t f ≤ 1`.
pub fn kkt_violation(gram: &SymMatrix, targets: &[f64], c: f64, alphas: &[f64], bias: f64) -> f64 {
    let coef: Vec<f64> = alphas.iter().zip(targets).map(|(a, t)| a * t).collect();
    let kc = gram.mul_vec(&coef);
    (0..targets.len())
        .map(|i| {
            let r = targets[i] * (kc[i] + bias) - 1.0;
            if alphas[i] <= 0.0 {
                (-r).max(0.0)
            } else if alphas[i] >= c {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max)
}
