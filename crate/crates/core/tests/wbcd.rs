//! End-to-end checks on the real Wisconsin file.

mod common;

use fbcd::data::{self, Class};
use fbcd::eval::{self, ExperimentConfig, LabelSource, ModelKind};
use fbcd::fuzzy;
use fbcd::numeric::{kernel_matrix, FeatureVector, KernelSpec};
use fbcd::persist::{ModelDocument, ReportDocument};
use fbcd::svm::{self, SmoSettings, SvmModel};

#[test]
fn raw_counts() {
    let raw = data::parse_wbcd(&common::raw_text()).unwrap();
    assert_eq!(raw.records.len(), 699);
    assert_eq!(raw.missing_count(), 16);
    let rs = data::clean(&raw);
    assert_eq!(rs.len(), 683);
    assert_eq!(rs.class_count(Class::Benign), 444);
    assert_eq!(rs.class_count(Class::Malignant), 239);
}

#[test]
fn cleaned_csv_round_trips() {
    let rs = common::wbcd();
    let again = data::parse_csv(&rs.to_csv()).unwrap();
    assert_eq!(again, rs);
    assert_eq!(again.fingerprint(), rs.fingerprint());
}

#[test]
fn default_split_sizes() {
    let rs = common::wbcd();
    let plan = data::split(&rs, data::SplitRatios::STANDARD, 0).unwrap();
    let sizes = [plan.train.len(), plan.test.len(), plan.validation.len()];
    assert_eq!(sizes, [477, 135, 71]);
    let targets = [478.0, 136.0, 69.0];
    for (s, t) in sizes.iter().zip(targets) {
        // one record of floor rounding per class
        assert!((*s as f64 - t).abs() <= 2.0);
    }
}

#[test]
fn ten_folds_of_sixty_eight_or_sixty_nine() {
    let rs = common::wbcd();
    let plan = data::make_folds(&rs, 10, 0).unwrap();
    let mut sizes = plan.sizes();
    sizes.sort_unstable();
    assert_eq!(sizes, [68, 68, 68, 68, 68, 68, 68, 69, 69, 69]);
}

#[test]
fn tautology_agrees_with_benign_share() {
    let rb =
        fuzzy::parse_rules("RULE all: IF Mitoses IS Low OR Mitoses IS High THEN class IS benign")
            .unwrap();
    let (labeled, s) = fuzzy::label_set(&rb, &common::wbcd()).unwrap();
    assert_eq!(s.agreeing, 444);
    assert!((s.agreement.unwrap() - 444.0 / 683.0).abs() < 1e-15);
    assert!(labeled
        .records
        .iter()
        .all(|r| r.fuzzy_label == Some(Class::Benign)));
}

#[test]
fn default_rules_cover_and_agree() {
    let text = std::fs::read_to_string(common::rules_path()).unwrap();
    let rb = fuzzy::parse_rules(&text).unwrap();
    assert!(rb.uncovered_classes().is_empty());
    let (_, s) = fuzzy::label_set(&rb, &common::wbcd()).unwrap();
    assert_eq!(s.records, 683);
    assert_eq!(s.agreeing, 661);
    assert!(s.agreement.unwrap() >= 0.90);

    let reparsed = fuzzy::parse_rules(&rb.to_string()).unwrap();
    assert_eq!(reparsed, rb);
}

#[test]
fn labeling_is_deterministic() {
    let rb = fuzzy::parse_rules(&std::fs::read_to_string(common::rules_path()).unwrap()).unwrap();
    let rs = common::wbcd();
    let a = fuzzy::label_set(&rb, &rs).unwrap().0.to_csv();
    let b = fuzzy::label_set(&rb, &rs).unwrap().0.to_csv();
    assert_eq!(a, b);
}

fn inputs(rs: &data::RecordSet, idx: &[usize]) -> (Vec<FeatureVector>, Vec<f64>) {
    idx.iter()
        .map(|&i| (rs.records[i].feature_vector(), rs.records[i].class.target()))
        .unzip()
}

#[test]
fn smo_kkt_on_full_dataset_and_train_split() {
    let rs = common::wbcd();
    let plan = data::split(&rs, data::SplitRatios::STANDARD, 0).unwrap();
    let all: Vec<usize> = (0..rs.len()).collect();
    for (idx, c) in [(&all, 1.0), (&plan.train, 1.0), (&plan.train, 0.1)] {
        let (xs, t) = inputs(&rs, idx);
        let gram = kernel_matrix(&KernelSpec::Linear, &xs).unwrap();
        let settings = SmoSettings::default();
        let sol = svm::solve_dual(&gram, &t, c, &settings).unwrap();
        let v = svm::kkt_violation(&gram, &t, c, &sol.alphas, sol.bias);
        assert!(
            v <= settings.tolerance * (1.0 + 1e-9),
            "n {} c {c}: violation {v}",
            xs.len()
        );

        let labels: Vec<Class> = t.iter().map(|&y| Class::from_decision(y)).collect();
        let model = SvmModel::from_solution(&xs, &t, &sol, KernelSpec::Linear, c, &settings);
        let primal = model.primal_objective(&xs, &labels);
        let dual = model.dual_objective();
        assert!(primal >= dual - 1e-9, "primal {primal} below dual {dual}");
        assert!(
            (primal - dual) / primal.abs().max(1.0) < 0.05,
            "gap {primal} vs {dual}"
        );
    }
}

#[test]
fn model_documents_reload_bit_exact_on_wbcd() {
    let rs = common::wbcd();
    for kind in [ModelKind::ElmRbf, ModelKind::SvmLinear] {
        let cfg = ExperimentConfig::new(kind).with_seed(7);
        let (clf, _) = eval::fit_split(&cfg, &rs).unwrap();
        let doc = ModelDocument::new(&clf, &cfg, &rs.fingerprint()).unwrap();
        let back = ModelDocument::from_json(&doc.to_json())
            .unwrap()
            .classifier()
            .unwrap();
        for r in &rs.records {
            assert_eq!(clf.decision(r).to_bits(), back.decision(r).to_bits());
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let rs = common::wbcd();
    for kind in [ModelKind::ElmRbf, ModelKind::SvmLinear] {
        let cfg = ExperimentConfig::new(kind).with_seed(21);
        let a = ReportDocument::CrossValidation(eval::run_cv(&cfg, &rs, 10).unwrap()).to_json();
        let b = ReportDocument::CrossValidation(eval::run_cv(&cfg, &rs, 10).unwrap()).to_json();
        assert_eq!(a, b);
        let a = ReportDocument::Phase(eval::run_split_experiment(&cfg, &rs).unwrap()).to_json();
        let b = ReportDocument::Phase(eval::run_split_experiment(&cfg, &rs).unwrap()).to_json();
        assert_eq!(a, b);
    }
}

#[test]
fn fuzzy_label_source_trains_on_rule_output() {
    let rb = fuzzy::parse_rules(&std::fs::read_to_string(common::rules_path()).unwrap()).unwrap();
    let (labeled, _) = fuzzy::label_set(&rb, &common::wbcd()).unwrap();
    let mut cfg = ExperimentConfig::new(ModelKind::SvmLinear);
    cfg.label_source = LabelSource::Fuzzy;
    cfg.rules_path = Some("rules/default.frs".into());
    let report = eval::run_cv(&cfg, &labeled, 10).unwrap();
    assert!(report.mean_test_accuracy > 0.95);
    let unlabeled = common::wbcd();
    assert!(eval::run_cv(&cfg, &unlabeled, 10).is_err());
}

#[test]
fn normalized_features_still_classify() {
    let rs = common::wbcd();
    for kind in [ModelKind::ElmRbf, ModelKind::SvmLinear] {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.normalize = true;
        let report = eval::run_cv(&cfg, &rs, 10).unwrap();
        assert!(report.config.normalize);
        assert!(
            report.mean_test_accuracy > 0.9,
            "{kind:?}: {}",
            report.mean_test_accuracy
        );
    }
}
