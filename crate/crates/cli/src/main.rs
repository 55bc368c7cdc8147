//! `fbcd`: ingest, fuzzy-label, train and evaluate breast-cancer classifiers.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.

mod config;
mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use fbcd::data::{self, DataError, RecordSet};
use fbcd::eval::{self, EvalError, ExperimentConfig, LabelSource};
use fbcd::fuzzy::{self, FuzzyError, RuleBase};
use fbcd::persist::{ModelDocument, PersistError, ReportDocument};
use serde_json::json;
use thiserror::Error;

use config::ModelFlags;
use render::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Data { path: String, source: DataError },
    #[error("{path}: {source}")]
    Rules { path: String, source: FuzzyError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Persist { path: String, source: PersistError },
    #[error(
        "dataset fingerprint {found} does not match the model's {expected}; \
         pass --allow-fingerprint-mismatch to evaluate anyway"
    )]
    FingerprintMismatch { expected: String, found: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Data { .. } => 2,
            CliError::Rules {
                source: FuzzyError::NoRuleFired { .. },
                ..
            } => 1,
            CliError::Rules { .. } => 2,
            CliError::Persist {
                source: PersistError::Json(_) | PersistError::Version { .. },
                ..
            } => 2,
            CliError::Eval(EvalError::Config(_))
            | CliError::Eval(EvalError::Data(
                DataError::Config(_) | DataError::TooManyFolds { .. },
            )) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "fbcd",
    version,
    about = "Fuzzy-labelled breast cancer detection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a raw UCI file, drop incomplete records, write the cleaned CSV.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Label records with a fuzzy rule base and report agreement.
    Label {
        input: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Train on the stratified split and write the model document.
    Train {
        input: PathBuf,
        #[command(flatten)]
        flags: ModelFlags,
        /// Model document path.
        #[arg(long)]
        output: PathBuf,
        /// Also write the phase report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Re-evaluate a saved model on the split recorded in it.
    Eval {
        input: PathBuf,
        #[arg(long = "model-file")]
        model_file: PathBuf,
        #[arg(long)]
        allow_fingerprint_mismatch: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Rotating k-fold cross-validation.
    Cv {
        input: PathBuf,
        #[command(flatten)]
        flags: ModelFlags,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Re-render a stored JSON report.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Run time and wall clock go next to the artifact so the artifact itself
/// stays byte-identical across runs.
fn write_timing(artifact: &Path, command: &str, started: Instant) -> Result<(), CliError> {
    let mut path = artifact.as_os_str().to_owned();
    path.push(".timing.json");
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let doc = json!({
        "command": command,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "finished_unix": finished,
    });
    write(Path::new(&path), &format!("{doc:#}\n"))
}

fn load_records(path: &Path) -> Result<RecordSet, CliError> {
    RecordSet::from_text(&read(path)?).map_err(|source| CliError::Data {
        path: path.display().to_string(),
        source,
    })
}

fn load_rules(path: &Path) -> Result<RuleBase, CliError> {
    let rb = fuzzy::parse_rules(&read(path)?).map_err(|source| CliError::Rules {
        path: path.display().to_string(),
        source,
    })?;
    for class in rb.uncovered_classes() {
        let name = match class {
            data::Class::Benign => "benign",
            data::Class::Malignant => "malignant",
        };
        eprintln!("warning: {}: no rule concludes {name}", path.display());
    }
    Ok(rb)
}

/// Applies the rule base when fuzzy labels are requested and the input does
/// not carry them yet.
fn prepare(rs: RecordSet, cfg: &ExperimentConfig) -> Result<RecordSet, CliError> {
    let unlabeled = rs.records.iter().any(|r| r.fuzzy_label.is_none());
    if cfg.label_source != LabelSource::Fuzzy || !unlabeled {
        return Ok(rs);
    }
    let path = cfg
        .rules_path
        .as_deref()
        .ok_or_else(|| CliError::Usage("--labels fuzzy requires --rules".into()))?;
    let rb = load_rules(Path::new(path))?;
    let (labeled, _) = fuzzy::label_set(&rb, &rs).map_err(|source| CliError::Rules {
        path: path.to_string(),
        source,
    })?;
    Ok(labeled)
}

fn summary_table(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<w$}  {v}\n"))
        .collect()
}

fn summary(rows: &[(&str, String)], json: serde_json::Value, format: Format) -> String {
    match format {
        Format::Table => summary_table(rows),
        Format::Csv => {
            let keys: Vec<&str> = rows.iter().map(|(k, _)| *k).collect();
            let vals: Vec<&str> = rows.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
        Format::Json => format!("{json:#}\n"),
    }
}

fn ingest(input: &Path, output: Option<&Path>, format: Format) -> Result<(), CliError> {
    let started = Instant::now();
    let text = read(input)?;
    let wrap = |source| CliError::Data {
        path: input.display().to_string(),
        source,
    };
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or(wrap(DataError::Empty))?;
    let (parsed, rs) = if first.trim_start().starts_with("id,") {
        let rs = data::parse_csv(&text).map_err(wrap)?;
        (rs.len(), rs)
    } else {
        let raw = data::parse_wbcd(&text).map_err(wrap)?;
        (raw.records.len(), data::clean(&raw))
    };
    if rs.is_empty() {
        return Err(wrap(DataError::Empty));
    }
    let benign = rs.class_count(data::Class::Benign);
    let malignant = rs.class_count(data::Class::Malignant);
    let fp = rs.fingerprint();
    let rows = [
        ("parsed", parsed.to_string()),
        ("dropped", (parsed - rs.len()).to_string()),
        ("kept", rs.len().to_string()),
        ("benign", benign.to_string()),
        ("malignant", malignant.to_string()),
        ("fingerprint", fp.clone()),
    ];
    let doc = json!({
        "parsed": parsed, "dropped": parsed - rs.len(), "kept": rs.len(),
        "benign": benign, "malignant": malignant, "fingerprint": fp,
    });
    if let Some(p) = output {
        write(p, &rs.to_csv())?;
        write_timing(p, "ingest", started)?;
    }
    emit(None, &summary(&rows, doc, format))
}

fn label(
    input: &Path,
    rules: &Path,
    output: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let started = Instant::now();
    let rb = load_rules(rules)?;
    let rs = load_records(input)?;
    let (labeled, s) = fuzzy::label_set(&rb, &rs).map_err(|source| CliError::Rules {
        path: rules.display().to_string(),
        source,
    })?;
    let agreement = s
        .agreement
        .map(|a| format!("{a:.4}"))
        .unwrap_or_else(|| "undefined".into());
    let rows = [
        ("records", s.records.to_string()),
        ("agreeing", s.agreeing.to_string()),
        ("agreement", agreement),
        ("benign_labels", s.benign_labels.to_string()),
        ("malignant_labels", s.malignant_labels.to_string()),
        ("fingerprint", labeled.fingerprint()),
    ];
    let mut doc = serde_json::to_value(&s).expect("summary serializes");
    doc["fingerprint"] = json!(labeled.fingerprint());
    if let Some(p) = output {
        write(p, &labeled.to_csv())?;
        write_timing(p, "label", started)?;
    }
    emit(None, &summary(&rows, doc, format))
}

fn train(
    input: &Path,
    flags: &ModelFlags,
    output: &Path,
    report: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = config::resolve(flags, None)?.experiment;
    let rs = prepare(load_records(input)?, &cfg)?;
    let (clf, plan) = eval::fit_split(&cfg, &rs)?;
    let phase = eval::evaluate_split(&cfg, &rs, &clf, &plan)?;
    let doc =
        ModelDocument::new(&clf, &cfg, &rs.fingerprint()).map_err(|source| CliError::Persist {
            path: output.display().to_string(),
            source,
        })?;
    write(output, &doc.to_json())?;
    write_timing(output, "train", started)?;
    let report_doc = ReportDocument::Phase(phase);
    if let Some(p) = report {
        write(p, &report_doc.to_json())?;
    }
    emit(None, &render::render(&report_doc, format))
}

fn evaluate(
    input: &Path,
    model_file: &Path,
    allow_mismatch: bool,
    output: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let started = Instant::now();
    let doc = ModelDocument::from_json(&read(model_file)?).map_err(|source| CliError::Persist {
        path: model_file.display().to_string(),
        source,
    })?;
    let cfg = doc.config().clone();
    let rs = prepare(load_records(input)?, &cfg)?;
    let found = rs.fingerprint();
    if found != doc.dataset_fingerprint() {
        let err = CliError::FingerprintMismatch {
            expected: doc.dataset_fingerprint().to_string(),
            found,
        };
        if !allow_mismatch {
            return Err(err);
        }
        eprintln!("warning: {err}");
    }
    let clf = doc.classifier().map_err(|source| CliError::Persist {
        path: model_file.display().to_string(),
        source,
    })?;
    let plan = data::split(&rs, cfg.ratios, cfg.seed).map_err(EvalError::from)?;
    let phase = eval::evaluate_split(&cfg, &rs, &clf, &plan)?;
    let text = render::render(&ReportDocument::Phase(phase), format);
    emit(output, &text)?;
    if let Some(p) = output {
        write_timing(p, "eval", started)?;
    }
    Ok(())
}

fn cross_validate(
    input: &Path,
    flags: &ModelFlags,
    folds: Option<usize>,
    output: Option<&Path>,
    format: Format,
) -> Result<(), CliError> {
    let started = Instant::now();
    let resolved = config::resolve(flags, folds)?;
    let rs = prepare(load_records(input)?, &resolved.experiment)?;
    let report = eval::run_cv(&resolved.experiment, &rs, resolved.folds)?;
    let text = render::render(&ReportDocument::CrossValidation(report), format);
    emit(output, &text)?;
    if let Some(p) = output {
        write_timing(p, "cv", started)?;
    }
    Ok(())
}

fn report(input: &Path, format: Format, output: Option<&Path>) -> Result<(), CliError> {
    let doc = ReportDocument::from_json(&read(input)?).map_err(|source| CliError::Persist {
        path: input.display().to_string(),
        source,
    })?;
    emit(output, &render::render(&doc, format))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest {
            input,
            output,
            format,
        } => ingest(&input, output.as_deref(), format),
        Command::Label {
            input,
            rules,
            output,
            format,
        } => label(&input, &rules, output.as_deref(), format),
        Command::Train {
            input,
            flags,
            output,
            report,
            format,
        } => train(&input, &flags, &output, report.as_deref(), format),
        Command::Eval {
            input,
            model_file,
            allow_fingerprint_mismatch,
            output,
            format,
        } => evaluate(
            &input,
            &model_file,
            allow_fingerprint_mismatch,
            output.as_deref(),
            format,
        ),
        Command::Cv {
            input,
            flags,
            folds,
            output,
            format,
        } => cross_validate(&input, &flags, folds, output.as_deref(), format),
        Command::Report {
            input,
            format,
            output,
        } => report(&input, format, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
