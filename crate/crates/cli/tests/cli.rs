use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn wbcd() -> PathBuf {
    root().join("data/breast-cancer-wisconsin.data")
}

fn fbcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbcd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn ingest_reports_counts_and_writes_clean_csv() {
    let dir = TempDir::new().unwrap();
    let clean = dir.path().join("clean.csv");
    let o = fbcd(&[
        "ingest",
        p(&wbcd()),
        "--output",
        p(&clean),
        "--format",
        "json",
    ]);
    let v = json(&o);
    assert_eq!(v["parsed"], 699);
    assert_eq!(v["dropped"], 16);
    assert_eq!(v["kept"], 683);
    assert_eq!(v["benign"], 444);
    assert_eq!(v["malignant"], 239);
    assert!(dir.path().join("clean.csv.timing.json").exists());

    let again = json(&fbcd(&["ingest", p(&clean), "--format", "json"]));
    assert_eq!(again["dropped"], 0);
    assert_eq!(again["kept"], 683);
    assert_eq!(again["fingerprint"], v["fingerprint"]);
}

#[test]
fn ingest_table_lists_kept_and_dropped() {
    let o = fbcd(&["ingest", p(&wbcd())]);
    let text = stdout(&o);
    assert!(text.contains("kept         683"), "{text}");
    assert!(text.contains("dropped      16"), "{text}");
}

#[test]
fn parse_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.data");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(fbcd(&["ingest", p(&empty)]).status.code(), Some(2));

    let bad = dir.path().join("bad.data");
    std::fs::write(
        &bad,
        "1000025,5,1,1,1,2,1,3,1,1,2\n1002945,5,4,4,5,7,10,3,2,1,3\n",
    )
    .unwrap();
    let o = fbcd(&["ingest", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fbcd(&["train"]).status.code(), Some(2));
    assert_eq!(fbcd(&["bogus"]).status.code(), Some(2));
    let o = fbcd(&["cv", p(&wbcd()), "--labels", "fuzzy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--rules"));
    assert_eq!(
        fbcd(&["cv", p(&wbcd()), "--folds", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        fbcd(&["cv", p(&wbcd()), "--split", "0.5,0.6"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let o = fbcd(&["ingest", "/nonexistent/wbcd.data"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tautology_rule_base_agrees_with_benign_share() {
    let dir = TempDir::new().unwrap();
    let rules = dir.path().join("all.frs");
    std::fs::write(
        &rules,
        "RULE all: IF Mitoses IS Low OR Mitoses IS High THEN class IS benign\n",
    )
    .unwrap();
    let o = fbcd(&[
        "label",
        p(&wbcd()),
        "--rules",
        p(&rules),
        "--format",
        "json",
    ]);
    assert!(stderr(&o).contains("no rule concludes malignant"));
    let v = json(&o);
    assert_eq!(v["agreeing"], 444);
    assert_eq!(v["malignant_labels"], 0);
    assert!((v["agreement"].as_f64().unwrap() - 0.6501).abs() < 1e-4);
}

#[test]
fn default_rules_label_every_record() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("labeled.csv");
    let rules = root().join("rules/default.frs");
    let o = fbcd(&[
        "label",
        p(&wbcd()),
        "--rules",
        p(&rules),
        "--output",
        p(&out),
        "--format",
        "json",
    ]);
    let v = json(&o);
    assert_eq!(v["records"], 683);
    assert!(v["agreement"].as_f64().unwrap() >= 0.90);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("id,f1,f2,f3,f4,f5,f6,f7,f8,f9,class,fuzzy_label\n"));
    assert_eq!(csv.lines().count(), 684);
}

#[test]
fn bad_rule_file_reports_position() {
    let dir = TempDir::new().unwrap();
    let rules = dir.path().join("bad.frs");
    std::fs::write(
        &rules,
        "RULE r: IF Mitoses IS Medium THEN class IS benign\n",
    )
    .unwrap();
    let o = fbcd(&["label", p(&wbcd()), "--rules", p(&rules)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1:23"), "{}", stderr(&o));
}

#[test]
fn silent_records_fail_with_their_ids() {
    let dir = TempDir::new().unwrap();
    let rules = dir.path().join("narrow.frs");
    std::fs::write(
        &rules,
        "RULE r: IF Mitoses IS High THEN class IS malignant\n",
    )
    .unwrap();
    let o = fbcd(&["label", p(&wbcd()), "--rules", p(&rules)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1000025"), "{}", stderr(&o));
}

#[test]
fn train_then_eval_reproduces_phase_report() {
    let dir = TempDir::new().unwrap();
    for model in ["elm-rbf", "svm-linear"] {
        let m = dir.path().join(format!("{model}.json"));
        let r = dir.path().join(format!("{model}-report.json"));
        let o = fbcd(&[
            "train",
            p(&wbcd()),
            "--model",
            model,
            "--seed",
            "3",
            "--output",
            p(&m),
            "--report",
            p(&r),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
        assert_eq!(doc["model_kind"], model);
        assert_eq!(doc["format_version"], 1);
        assert_eq!(doc["seed"], 3);

        let e = dir.path().join(format!("{model}-eval.json"));
        let o = fbcd(&[
            "eval",
            p(&wbcd()),
            "--model-file",
            p(&m),
            "--format",
            "json",
            "--output",
            p(&e),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(std::fs::read(&e).unwrap(), std::fs::read(&r).unwrap());
    }
}

#[test]
fn eval_refuses_other_dataset_unless_overridden() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.json");
    assert!(fbcd(&["train", p(&wbcd()), "--output", p(&m)])
        .status
        .success());

    let text = std::fs::read_to_string(wbcd()).unwrap();
    let subset: String = text.lines().take(300).map(|l| format!("{l}\n")).collect();
    let other = dir.path().join("other.data");
    std::fs::write(&other, subset).unwrap();

    let o = fbcd(&["eval", p(&other), "--model-file", p(&m)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fingerprint"));
    let o = fbcd(&[
        "eval",
        p(&other),
        "--model-file",
        p(&m),
        "--allow-fingerprint-mismatch",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn cv_emits_one_row_per_fold_plus_mean() {
    let o = fbcd(&["cv", p(&wbcd()), "--folds", "10", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0]
        .starts_with("iteration,val_fold,test_folds,train_acc,test_acc,val_acc,n,RMSE,R2,MAPE%"));
    assert!(lines[11].starts_with("mean,"));

    let table = stdout(&fbcd(&["cv", p(&wbcd()), "--model", "svm-linear"]));
    assert!(table.contains("Linear-SVM"));
    assert_eq!(table.lines().filter(|l| l.starts_with("mean")).count(), 1);
}

#[test]
fn fuzzy_labels_drive_training() {
    let rules = root().join("rules/default.frs");
    let v = json(&fbcd(&[
        "cv",
        p(&wbcd()),
        "--labels",
        "fuzzy",
        "--rules",
        p(&rules),
        "--format",
        "json",
    ]));
    assert_eq!(v["config"]["label_source"], "fuzzy");
    assert_eq!(v["iterations"].as_array().unwrap().len(), 10);
    assert!(v["mean_test_accuracy"].as_f64().unwrap() > 0.9);
}

#[test]
fn report_rerenders_stored_json() {
    let dir = TempDir::new().unwrap();
    let cv = dir.path().join("cv.json");
    let o = fbcd(&["cv", p(&wbcd()), "--format", "json", "--output", p(&cv)]);
    assert!(o.status.success());
    let csv_direct = stdout(&fbcd(&["cv", p(&wbcd()), "--format", "csv"]));
    let csv_again = stdout(&fbcd(&["report", p(&cv), "--format", "csv"]));
    assert_eq!(csv_direct, csv_again);
    let round = stdout(&fbcd(&["report", p(&cv), "--format", "json"]));
    assert_eq!(round, std::fs::read_to_string(&cv).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "model = svm-linear\nc = 0.5\nseed = 9\nfolds = 5\n").unwrap();
    let v = json(&fbcd(&[
        "cv",
        p(&wbcd()),
        "--config",
        p(&cfg),
        "--format",
        "json",
    ]));
    assert_eq!(v["config"]["model"], "svm-linear");
    assert_eq!(v["config"]["c"], 0.5);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["k"], 5);
    assert_eq!(v["standard_scheme"], false);
    let v = json(&fbcd(&[
        "cv",
        p(&wbcd()),
        "--config",
        p(&cfg),
        "--c",
        "2",
        "--format",
        "json",
    ]));
    assert_eq!(v["config"]["c"], 2.0);

    std::fs::write(&cfg, "kernel = poly\n").unwrap();
    assert_eq!(
        fbcd(&["cv", p(&wbcd()), "--config", p(&cfg)]).status.code(),
        Some(2)
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut models = Vec::new();
    let mut reports = Vec::new();
    for run in 0..2 {
        let m = dir.path().join(format!("m{run}.json"));
        let cv = dir.path().join(format!("cv{run}.json"));
        assert!(fbcd(&[
            "train",
            p(&wbcd()),
            "--model",
            "svm-linear",
            "--seed",
            "5",
            "--output",
            p(&m)
        ])
        .status
        .success());
        assert!(fbcd(&[
            "cv",
            p(&wbcd()),
            "--seed",
            "5",
            "--format",
            "json",
            "--output",
            p(&cv)
        ])
        .status
        .success());
        models.push(std::fs::read(&m).unwrap());
        reports.push(std::fs::read(&cv).unwrap());
    }
    assert_eq!(models[0], models[1]);
    assert_eq!(reports[0], reports[1]);
}
