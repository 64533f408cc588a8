use std::path::Path;
use std::process::{Command, Output};

fn funcmapper(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_funcmapper"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn evaluate_writes_reports_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = funcmapper(dir.path(), &["evaluate", "--backend", "mock", "--variant", "both"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o),
        "Full prompt | Recall@5_avg = 73.61%\nClassification-refined prompt | Recall@5_avg = 75.69%\n"
    );
    for name in ["evaluation-full.json", "evaluation-refined.json", "comparison.txt", "run-config.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run-config.json")).unwrap()).unwrap();
    assert_eq!(echo["command"], "evaluate");
    assert_eq!(echo["k"], 5);
    assert_eq!(echo["backend"]["backend"], "mock");
}

#[test]
fn preprocessed_corpus_is_accepted_as_input() {
    let dir = tempfile::tempdir().unwrap();
    let first = funcmapper(dir.path(), &["preprocess"]);
    assert_eq!(first.status.code(), Some(0));
    let processed = dir.path().join("processed.json");
    let again = tempfile::tempdir().unwrap();
    let second = funcmapper(again.path(), &["stats", "--corpus", processed.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    let direct = funcmapper(again.path(), &["stats"]);
    assert_eq!(stdout(&second), stdout(&direct));
}

#[test]
fn prompt_prints_five_sections() {
    let dir = tempfile::tempdir().unwrap();
    let o = funcmapper(dir.path(), &["prompt", "--clause", "BENCH:5.1.3:1", "--variant", "refined"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let headers: Vec<&str> = text.lines().filter(|l| l.starts_with("### ")).collect();
    assert_eq!(headers, ["### GOAL", "### DATABASE", "### REQUIREMENT", "### EXAMPLE", "### ANALYSIS"]);
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(funcmapper(dir.path(), &["evaluate", "--k", "0"]).status.code(), Some(2));
    assert_eq!(funcmapper(dir.path(), &["prompt", "--clause", "NOPE:1"]).status.code(), Some(2));
    assert_eq!(funcmapper(dir.path(), &["check", "--model", "/nonexistent/model.json"]).status.code(), Some(2));
    assert_eq!(funcmapper(dir.path(), &["bogus"]).status.code(), Some(2));
    let budget = funcmapper(dir.path(), &["prompt", "--clause", "BENCH:5.1.3:1", "--budget", "10"]);
    assert_eq!(budget.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&budget.stderr).contains("error"));
}

#[test]
fn check_passes_when_every_zone_complies() {
    let dir = tempfile::tempdir().unwrap();
    let model = funcmapper::shipped::poc_model();
    let mut doc: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
    // mark the zone-1 door that is not yet an exit as one
    for entity in doc["entities"].as_array_mut().unwrap() {
        if entity["class_tag"] == "Door" {
            entity["properties"]["fire_exit"] = serde_json::Value::Bool(true);
        }
    }
    let path = dir.path().join("model.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let o = funcmapper(dir.path(), &["check", "--model", path.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(!text.contains("not pass"), "{text}");
    assert_eq!(o.status.code(), Some(0), "{text}");
}
