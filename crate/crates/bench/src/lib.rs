//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use fbcd::data::RecordSet;
use fbcd::fuzzy::{self, RuleBase};

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

/// The cleaned Wisconsin records.
pub fn wbcd() -> RecordSet {
    let text = std::fs::read_to_string(repo_file("data/breast-cancer-wisconsin.data"))
        .expect("dataset present under data/");
    RecordSet::from_text(&text).expect("dataset parses")
}

/// The shipped rule base.
pub fn default_rules() -> RuleBase {
    let text = std::fs::read_to_string(repo_file("rules/default.frs")).expect("rules present");
    fuzzy::parse_rules(&text).expect("default rules parse")
}
