//! Experiment settings from flags and an optional `key=value` file.
//!
//! Precedence is flag, then file, then the per-model default.

use std::collections::BTreeMap;
use std::path::Path;

use clap::{Args, ValueEnum};
use fbcd::data::SplitRatios;
use fbcd::eval::{ExperimentConfig, LabelSource, ModelKind, STANDARD_FOLDS};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "elm-rbf")]
    ElmRbf,
    #[value(name = "svm-linear")]
    SvmLinear,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::ElmRbf => ModelKind::ElmRbf,
            ModelArg::SvmLinear => ModelKind::SvmLinear,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LabelsArg {
    Original,
    Fuzzy,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ModelFlags {
    /// Classifier to train.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Regularization (ELM) or box constraint (SVM).
    #[arg(long)]
    pub c: Option<f64>,
    /// RBF width; median pairwise distance of the training set when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// SMO KKT tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// SMO quiet sweeps required to stop.
    #[arg(long)]
    pub max_passes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train,test,validation ratios, e.g. 0.7,0.2,0.1.
    #[arg(long)]
    pub split: Option<String>,
    /// Fuzzy rule file.
    #[arg(long)]
    pub rules: Option<String>,
    #[arg(long, value_enum)]
    pub labels: Option<LabelsArg>,
    /// Scale every feature from [1, 10] to [0, 1].
    #[arg(long)]
    pub normalize: bool,
    /// File of key=value lines; flags take precedence.
    #[arg(long)]
    pub config: Option<String>,
}

const KEYS: [&str; 11] = [
    "model",
    "c",
    "sigma",
    "tol",
    "max_passes",
    "seed",
    "split",
    "folds",
    "rules",
    "labels",
    "normalize",
];

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(format!("line {}: unknown key {k:?}", n + 1));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for {key}")))
}

pub fn parse_split(v: &str) -> Result<SplitRatios, CliError> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| parse_value("split", p.trim()))
        .collect::<Result<_, _>>()?;
    let [train, test, validation] = parts[..] else {
        return Err(CliError::Usage(format!(
            "split needs three ratios, got {v:?}"
        )));
    };
    let ratios = SplitRatios {
        train,
        test,
        validation,
    };
    ratios
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(ratios)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value {v:?} for {key}"))),
    }
}

/// Resolved settings for a training or CV run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub folds: usize,
}

pub fn resolve(flags: &ModelFlags, folds_flag: Option<usize>) -> Result<Resolved, CliError> {
    let file = match &flags.config {
        Some(p) => read_config_file(Path::new(p))?,
        None => BTreeMap::new(),
    };
    let get = |k: &str| file.get(k).map(String::as_str);

    let model: ModelKind = match (flags.model, get("model")) {
        (Some(m), _) => m.into(),
        (None, Some(v)) => ModelArg::from_str(v, false)
            .map_err(|_| CliError::Usage(format!("invalid value {v:?} for model")))?
            .into(),
        (None, None) => ModelKind::ElmRbf,
    };
    let seed = match flags.seed {
        Some(s) => s,
        None => get("seed")
            .map(|v| parse_value("seed", v))
            .transpose()?
            .unwrap_or(0),
    };
    let mut cfg = ExperimentConfig::new(model).with_seed(seed);
    if let Some(c) = flags
        .c
        .or(get("c").map(|v| parse_value("c", v)).transpose()?)
    {
        cfg.c = c;
    }
    cfg.sigma = flags
        .sigma
        .or(get("sigma").map(|v| parse_value("sigma", v)).transpose()?);
    if let Some(t) = flags
        .tol
        .or(get("tol").map(|v| parse_value("tol", v)).transpose()?)
    {
        cfg.smo.tolerance = t;
    }
    if let Some(p) = flags.max_passes.or(get("max_passes")
        .map(|v| parse_value("max_passes", v))
        .transpose()?)
    {
        cfg.smo.max_passes = p;
    }
    if let Some(s) = flags.split.as_deref().or(get("split")) {
        cfg.ratios = parse_split(s)?;
    }
    cfg.rules_path = flags.rules.clone().or(get("rules").map(str::to_string));
    let labels = match (flags.labels, get("labels")) {
        (Some(l), _) => l,
        (None, Some(v)) => LabelsArg::from_str(v, false)
            .map_err(|_| CliError::Usage(format!("invalid value {v:?} for labels")))?,
        (None, None) => LabelsArg::Original,
    };
    cfg.label_source = match labels {
        LabelsArg::Original => LabelSource::Original,
        LabelsArg::Fuzzy => LabelSource::Fuzzy,
    };
    cfg.normalize = flags.normalize
        || get("normalize")
            .map(|v| parse_bool("normalize", v))
            .transpose()?
            .unwrap_or(false);
    let folds = match folds_flag {
        Some(k) => k,
        None => get("folds")
            .map(|v| parse_value("folds", v))
            .transpose()?
            .unwrap_or(STANDARD_FOLDS),
    };
    if cfg.label_source == LabelSource::Fuzzy && cfg.rules_path.is_none() {
        return Err(CliError::Usage("--labels fuzzy requires --rules".into()));
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Resolved {
        experiment: cfg,
        folds,
    })
}
