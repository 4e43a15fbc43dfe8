//! Drives the `roadgnn` binary end to end on small datasets.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
window = 3

[data.synthetic]
num_nodes = 16
num_timesteps = 60
topology = "grid"
diffusion_rate = 0.3
daily_period = 12
noise_std = 0.1
seed = 1

[train]
max_epochs = 4
patience = 2

[models.gcn]
num_layers = 1
hidden_dim = 4

[models.sage]
num_layers = 1
hidden_dim = 4
fanouts = [3]

[models.ggnn]
num_steps = 2
hidden_dim = 4
"#;

fn roadgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadgnn"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_config_exits_2_naming_the_path() {
    let o = roadgnn(&["train", "--model", "gcn", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/run.toml"), "{}", stderr(&o));
}

#[test]
fn malformed_config_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "window = 3\n\n[train]\nbatch_size = -4\n");
    let o = roadgnn(&["train", "--model", "gcn", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("batch_size"), "{err}");
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[compare]\nmodels = []\n"));
    let o = roadgnn(&["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("compare"), "{}", stderr(&o));
}

#[test]
fn missing_data_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data.files]\ngraph = \"g.json\"\nfeatures = \"f.csv\"\n");
    let o = roadgnn(&["baseline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("g.json"), "{}", stderr(&o));
}

#[test]
fn generate_is_byte_identical_for_a_seed_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let runs: Vec<PathBuf> = ["a", "b"].iter().map(|d| dir.path().join(d)).collect();
    for out in &runs {
        let o = roadgnn(&["generate", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap(), "--quiet"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    for file in ["graph.json", "features.csv", "manifest.json"] {
        let a = std::fs::read(runs[0].join(file)).unwrap();
        let b = std::fs::read(runs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    let ds = roadgnn::datasets::load_dataset(runs[0].join("graph.json"), runs[0].join("features.csv")).unwrap();
    assert_eq!(ds.num_nodes(), 16);
    assert_eq!(ds.num_timesteps(), 60);
    let manifest = read_json(runs[0].join("manifest.json"));
    assert_eq!(manifest["config"]["data"]["synthetic"]["seed"], 7);
    assert_eq!(manifest["num_edges"], 24);
}

#[test]
fn generated_files_feed_later_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = dir.path().join("data");
    assert!(roadgnn(&["generate", "--config", cfg.to_str().unwrap(), "--out", data.to_str().unwrap()]).status.success());
    let cfg2 = dir.path().join("files.toml");
    std::fs::write(
        &cfg2,
        "window = 3\n[data.files]\ngraph = \"data/graph.json\"\nfeatures = \"data/features.csv\"\n",
    )
    .unwrap();
    let out = dir.path().join("base");
    let o = roadgnn(&["baseline", "--config", cfg2.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let from_files = read_json(out.join("baseline/metrics.json"));
    assert_eq!(from_files["dataset"]["source"], "files");

    let out_syn = dir.path().join("base_syn");
    assert!(roadgnn(&["baseline", "--config", cfg.to_str().unwrap(), "--out", out_syn.to_str().unwrap()]).status.success());
    let synthetic = read_json(out_syn.join("baseline/metrics.json"));
    assert_eq!(from_files["dataset"]["sha256"], synthetic["dataset"]["sha256"]);
    assert_eq!(from_files["test"], synthetic["test"]);
    let (rmse, mae) = (synthetic["test"]["rmse"].as_f64().unwrap(), synthetic["test"]["mae"].as_f64().unwrap());
    assert!(mae <= rmse);
}

#[test]
fn train_writes_artifacts_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut metrics = Vec::new();
    for run in ["one", "two"] {
        let out = dir.path().join(run);
        let o = roadgnn(&["train", "--model", "ggnn", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("GGNN"));
        let history = std::fs::read_to_string(out.join("ggnn/history.csv")).unwrap();
        assert!(history.starts_with("epoch,train_loss,val_loss,wall_ms\n"));
        assert!(out.join("ggnn/checkpoint.json").is_file());
        metrics.push(std::fs::read(out.join("ggnn/metrics.json")).unwrap());
    }
    assert_eq!(metrics[0], metrics[1]);
    let m: Value = serde_json::from_slice(&metrics[0]).unwrap();
    let (rmse, mae) = (m["test"]["rmse"].as_f64().unwrap(), m["test"]["mae"].as_f64().unwrap());
    assert!(rmse.is_finite() && mae.is_finite() && mae <= rmse);
    assert_eq!(m["config"]["models"]["ggnn"]["num_steps"], 2);
}

#[test]
fn one_model_comparison_has_one_winning_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[compare]\nmodels = [\"sage\"]\n"));
    let out = dir.path().join("out");
    let o = roadgnn(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(out.join("report.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
    assert_eq!(report["winner"], "sage");
    let table = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout), table);
}

#[test]
fn three_model_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = roadgnn(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(out.join("report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let mut best: Option<(f64, &str)> = None;
    for row in rows {
        let key = row["model"].as_str().unwrap();
        let (rmse, mae) = (row["rmse"].as_f64().unwrap(), row["mae"].as_f64().unwrap());
        assert!(mae <= rmse, "{key}");
        if best.is_none_or(|(b, _)| rmse < b) {
            best = Some((rmse, key));
        }
        let m = read_json(out.join(key).join("metrics.json"));
        assert_eq!(m["dataset"], report["dataset"]);
        assert_eq!(m["test"]["rmse"].as_f64().unwrap(), rmse);
    }
    assert_eq!(report["winner"].as_str(), best.map(|(_, k)| k));
    let table = std::fs::read_to_string(out.join("report.txt")).unwrap();
    for name in ["GCN", "GraphSAGE", "GGNN", "Historical mean"] {
        assert!(table.contains(name), "{table}");
    }
}

/// A learning rate this large sends every parameter to ±1e300 after one step.
fn divergent_config(dir: &Path) -> PathBuf {
    write_config(dir, &SMALL.replace("max_epochs = 4", "max_epochs = 4\nlearning_rate = 1e300"))
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = divergent_config(dir.path());
    let out = dir.path().join("out");
    let o = roadgnn(&["train", "--model", "gcn", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("epoch"), "{}", stderr(&o));
}

#[test]
fn failed_models_give_a_partial_report_and_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = divergent_config(dir.path());
    let out = dir.path().join("out");
    let o = roadgnn(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let report = read_json(out.join("report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["error"].is_string()));
    assert!(report["winner"].is_null());
}
