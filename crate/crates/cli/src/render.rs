//! Plain-text tables and CSV for reports.
//!
//! Columns run RMSE, R², MAPE first, then the confusion-matrix criteria.

use fbcd::eval::{CvReport, PhaseReport};
use fbcd::metrics::{MetricReport, Rate};
use fbcd::persist::ReportDocument;

const METRIC_COLUMNS: [&str; 12] = [
    "n",
    "RMSE",
    "R2",
    "MAPE%",
    "accuracy",
    "precision",
    "sensitivity",
    "specificity",
    "f_measure",
    "FPR",
    "FNR",
    "TP/FP/FN/TN",
];

fn rate(r: Rate) -> String {
    format!("{r:.4}")
}

fn metric_cells(m: &MetricReport) -> Vec<String> {
    let c = &m.counts;
    vec![
        m.n.to_string(),
        format!("{:.4}", m.rmse),
        rate(m.r_squared),
        format!("{:.4}", m.mape),
        rate(m.rates.accuracy),
        rate(m.rates.precision),
        rate(m.rates.sensitivity),
        rate(m.rates.specificity),
        rate(m.rates.f_measure),
        rate(m.rates.fpr),
        rate(m.rates.fnr),
        format!("{}/{}/{}/{}", c.tp, c.fp, c.fn_, c.tn),
    ]
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn aligned(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        out.push_str(&"-".repeat(total));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = self.header.join(",") + "\n";
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn phase_table(r: &PhaseReport) -> Table {
    let mut header = vec!["phase"];
    header.extend(METRIC_COLUMNS);
    let mut t = Table::new(&header);
    for (name, m) in [
        ("train", Some(&r.train)),
        ("test", r.test.as_ref()),
        ("validation", r.validation.as_ref()),
    ] {
        if let Some(m) = m {
            let mut row = vec![name.to_string()];
            row.extend(metric_cells(m));
            t.rows.push(row);
        }
    }
    t
}

fn cv_table(r: &CvReport) -> Table {
    let mut header = vec![
        "iteration",
        "val_fold",
        "test_folds",
        "train_acc",
        "test_acc",
        "val_acc",
    ];
    header.extend(METRIC_COLUMNS);
    let mut t = Table::new(&header);
    for it in &r.iterations {
        let mut row = vec![
            it.iteration.to_string(),
            it.validation_fold.to_string(),
            format!("{}+{}", it.test_folds[0], it.test_folds[1]),
            format!("{:.4}", it.train_accuracy),
            format!("{:.4}", it.test_accuracy),
            format!("{:.4}", it.validation_accuracy),
        ];
        row.extend(metric_cells(&it.test));
        t.rows.push(row);
    }
    let mut row = vec![
        "mean".to_string(),
        String::new(),
        String::new(),
        format!("{:.4}", r.mean_train_accuracy),
        format!("{:.4}", r.mean_test_accuracy),
        format!("{:.4}", r.mean_validation_accuracy),
    ];
    row.extend(metric_cells(&r.pooled_test));
    t.rows.push(row);
    t
}

fn preamble(model: &str, fingerprint: &str, seed: u64, extra: &str) -> String {
    format!("model {model}  seed {seed}  {extra}\ndataset {fingerprint}\n\n")
}

pub fn phase_text(r: &PhaseReport) -> String {
    let sigma = r
        .sigma
        .map(|s| format!("  sigma {s:.6}"))
        .unwrap_or_default();
    let extra = format!(
        "c {}{sigma}  split {}/{}/{}",
        r.config.c, r.phase_sizes[0], r.phase_sizes[1], r.phase_sizes[2]
    );
    preamble(
        r.config.model.display_name(),
        &r.dataset_fingerprint,
        r.config.seed,
        &extra,
    ) + &phase_table(r).aligned()
}

pub fn cv_text(r: &CvReport) -> String {
    let extra = format!("c {}  folds {}", r.config.c, r.k);
    let mut out = preamble(
        r.config.model.display_name(),
        &r.dataset_fingerprint,
        r.config.seed,
        &extra,
    );
    if !r.standard_scheme {
        out.push_str("note: non-standard fold count\n");
    }
    out + &cv_table(r).aligned() + "(mean row: metric columns are pooled over all test folds)\n"
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

pub fn render(doc: &ReportDocument, format: Format) -> String {
    match (doc, format) {
        (_, Format::Json) => doc.to_json(),
        (ReportDocument::Phase(r), Format::Table) => phase_text(r),
        (ReportDocument::Phase(r), Format::Csv) => phase_table(r).csv(),
        (ReportDocument::CrossValidation(r), Format::Table) => cv_text(r),
        (ReportDocument::CrossValidation(r), Format::Csv) => cv_table(r).csv(),
    }
}
