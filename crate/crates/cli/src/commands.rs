//! The four subcommands. Each returns what it wrote so callers (and tests)
//! can inspect results without re-reading files.

use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use roadgnn::datasets::{generate_synthetic, write_dataset};
use roadgnn::models::Checkpoint;
use roadgnn::training::{evaluate, history_csv, train, HistoricalMean, Metrics, TrainOutcome};

use crate::config::{ModelKind, RunConfig};
use crate::error::CliError;
use crate::pipeline::{content_hash, prepare, DatasetFingerprint, Prepared};
use crate::report::{ComparisonReport, ReportRow};

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn pretty(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("artifact serialises") + "\n"
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateManifest {
    pub graph: String,
    pub features: String,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_timesteps: usize,
    pub sha256: String,
    pub config: serde_json::Value,
}

/// Writes `graph.json`, `features.csv` and `manifest.json` into the output directory.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateManifest, CliError> {
    cfg.validate()?;
    let synth = cfg.data.synthetic.as_ref().ok_or_else(|| {
        CliError::Config("generate needs a [data.synthetic] section, not [data.files]".into())
    })?;
    let ds = generate_synthetic(synth)?;
    let out = cfg.out_dir();
    let (graph, features) = write_dataset(&ds, &out)?;
    let manifest = GenerateManifest {
        graph: file_name(&graph),
        features: file_name(&features),
        num_nodes: ds.num_nodes(),
        num_edges: ds.graph().edges().len(),
        num_timesteps: ds.num_timesteps(),
        sha256: content_hash(&ds)?,
        config: cfg.echo(),
    };
    write_file(&out.join("manifest.json"), &pretty(&manifest))?;
    info!(
        "generated {} nodes, {} edges, {} timesteps into {}",
        manifest.num_nodes,
        manifest.num_edges,
        manifest.num_timesteps,
        out.display()
    );
    Ok(manifest)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Contents of `metrics.json` for `train` and `baseline`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub model: String,
    pub name: String,
    /// Test-split metrics in raw density units.
    pub test: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<usize>,
    pub dataset: DatasetFingerprint,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub outcome: TrainOutcome,
    pub test: Metrics,
}

#[derive(Clone, Debug)]
pub struct ModelArtifacts {
    pub dir: PathBuf,
    pub metrics: MetricsFile,
}

/// Trains and scores one model on prepared data. Writes nothing.
pub fn fit_model(cfg: &RunConfig, data: &Prepared, kind: ModelKind) -> Result<TrainedModel, CliError> {
    let spec = cfg.model_spec(kind, data.input_dim);
    let outcome = train(&spec, &data.ctx, &data.splits, &cfg.train)?;
    let test = evaluate(&outcome.model, &data.ctx, &data.splits.test)?;
    Ok(TrainedModel { kind, outcome, test })
}

/// Checkpoint metadata: enough to rebuild the inputs the model expects.
pub fn checkpoint_meta(cfg: &RunConfig, data: &Prepared, kind: ModelKind) -> serde_json::Value {
    json!({
        "model": kind.key(),
        "window": cfg.window,
        "normalizer": data.normalizer,
        "dataset": data.fingerprint,
        "config": cfg.echo(),
    })
}

/// Writes `checkpoint.json`, `history.csv` and `metrics.json` into `<out>/<model>/`.
pub fn write_model_artifacts(
    cfg: &RunConfig,
    data: &Prepared,
    trained: &TrainedModel,
) -> Result<ModelArtifacts, CliError> {
    let dir = cfg.out_dir().join(trained.kind.key());
    let model = &trained.outcome.model;
    let checkpoint = Checkpoint::from_model(model, checkpoint_meta(cfg, data, trained.kind));
    write_file(&dir.join("checkpoint.json"), &checkpoint.to_json_string())?;
    write_file(&dir.join("history.csv"), &history_csv(&trained.outcome.history))?;
    let metrics = MetricsFile {
        model: trained.kind.key().into(),
        name: model.spec().display_name().into(),
        test: trained.test,
        best_epoch: Some(trained.outcome.best_epoch),
        epochs_run: Some(trained.outcome.history.len()),
        dataset: data.fingerprint.clone(),
        config: cfg.echo(),
    };
    write_file(&dir.join("metrics.json"), &pretty(&metrics))?;
    Ok(ModelArtifacts { dir, metrics })
}

fn log_trained(t: &TrainedModel) {
    info!(
        "{}: {} epochs, best epoch {}, test RMSE {:.4}, MAE {:.4}",
        t.kind.key(),
        t.outcome.history.len(),
        t.outcome.best_epoch,
        t.test.rmse,
        t.test.mae
    );
}

pub fn cmd_train(cfg: &RunConfig, kind: ModelKind) -> Result<ModelArtifacts, CliError> {
    let data = prepare(cfg)?;
    info!("training {} on {} windows", kind.key(), data.splits.train.len());
    let trained = fit_model(cfg, &data, kind)?;
    log_trained(&trained);
    write_model_artifacts(cfg, &data, &trained)
}

/// Scores the historical-mean predictor; writes `<out>/baseline/metrics.json`.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<MetricsFile, CliError> {
    let data = prepare(cfg)?;
    let test = baseline_metrics(&data)?;
    let metrics = MetricsFile {
        model: "baseline".into(),
        name: "Historical mean".into(),
        test,
        best_epoch: None,
        epochs_run: None,
        dataset: data.fingerprint.clone(),
        config: cfg.echo(),
    };
    write_file(&cfg.out_dir().join("baseline").join("metrics.json"), &pretty(&metrics))?;
    info!("baseline: test RMSE {:.4}, MAE {:.4}", test.rmse, test.mae);
    Ok(metrics)
}

fn baseline_metrics(data: &Prepared) -> Result<Metrics, CliError> {
    Ok(HistoricalMean::fit(&data.raw.train)?.evaluate(&data.raw.test)?)
}

pub struct CompareResult {
    pub report: ComparisonReport,
    pub json_path: PathBuf,
    pub table_path: PathBuf,
}

/// Trains every requested model on the same splits, one thread per model,
/// then writes per-model artifacts plus `report.json` and `report.txt`.
///
/// A failed model becomes a row carrying its error; the report is written
/// either way. Callers turn failures into [`CliError::PartialComparison`].
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareResult, CliError> {
    let data = prepare(cfg)?;
    let baseline = baseline_metrics(&data)?;

    let shared = &data;
    let results: Vec<Result<TrainedModel, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .compare
            .models
            .iter()
            .map(|&kind| s.spawn(move || fit_model(cfg, shared, kind)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(CliError::Core(roadgnn::Error::State("training thread panicked".into())))
                })
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    for (&kind, result) in cfg.compare.models.iter().zip(results) {
        let name = cfg.model_spec(kind, data.input_dim).display_name().to_string();
        let row = match result.and_then(|t| write_model_artifacts(cfg, &data, &t).map(|_| t)) {
            Ok(t) => {
                log_trained(&t);
                ReportRow {
                    model: kind.key().into(),
                    name,
                    rmse: Some(t.test.rmse),
                    mae: Some(t.test.mae),
                    best_epoch: Some(t.outcome.best_epoch),
                    epochs_run: Some(t.outcome.history.len()),
                    error: None,
                }
            }
            Err(e) => {
                warn!("{} failed: {e}", kind.key());
                ReportRow {
                    model: kind.key().into(),
                    name,
                    rmse: None,
                    mae: None,
                    best_epoch: None,
                    epochs_run: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }

    let report = ComparisonReport::assemble(
        rows,
        cfg.compare.sort,
        baseline,
        data.fingerprint.clone(),
        cfg.echo(),
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    );
    let out = cfg.out_dir();
    let json_path = out.join("report.json");
    let table_path = out.join("report.txt");
    write_file(&json_path, &report.to_json_string())?;
    write_file(&table_path, &report.render_table())?;
    Ok(CompareResult {
        report,
        json_path,
        table_path,
    })
}
