//! Dataset → windows → splits → normalised samples, shared by every command.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use roadgnn::datasets::{
    features_csv, fit_normalizer, generate_synthetic, load_dataset, make_windows, split,
    Normalizer, Splits, TrafficDataset, WindowedSample,
};
use roadgnn::GraphContext;

use crate::config::RunConfig;
use crate::error::CliError;

/// Identifies the data a run used: where it came from and a content hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    /// `"synthetic"` or `"files"`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_path: Option<String>,
    pub num_nodes: usize,
    pub num_timesteps: usize,
    /// SHA-256 over the canonical graph JSON, a newline, and the canonical features CSV.
    pub sha256: String,
}

pub fn content_hash(ds: &TrafficDataset) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    hasher.update(ds.graph().to_json_string().as_bytes());
    hasher.update(b"\n");
    hasher.update(features_csv(ds)?.as_bytes());
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Generates or loads the configured dataset.
pub fn load(cfg: &RunConfig) -> Result<(TrafficDataset, DatasetFingerprint), CliError> {
    let (ds, mut fp) = match (&cfg.data.synthetic, &cfg.data.files) {
        (Some(s), None) => {
            let ds = generate_synthetic(s)?;
            let fp = DatasetFingerprint {
                source: "synthetic".into(),
                seed: Some(s.seed),
                graph_path: None,
                features_path: None,
                num_nodes: 0,
                num_timesteps: 0,
                sha256: String::new(),
            };
            (ds, fp)
        }
        (None, Some(files)) => {
            for path in [&files.graph, &files.features] {
                if !path.is_file() {
                    return Err(CliError::Config(format!(
                        "[data.files] {} does not exist",
                        path.display()
                    )));
                }
            }
            let ds = load_dataset(&files.graph, &files.features)?;
            let fp = DatasetFingerprint {
                source: "files".into(),
                seed: None,
                graph_path: Some(files.graph.display().to_string()),
                features_path: Some(files.features.display().to_string()),
                num_nodes: 0,
                num_timesteps: 0,
                sha256: String::new(),
            };
            (ds, fp)
        }
        _ => {
            return Err(CliError::Config(
                "[data] give exactly one of data.synthetic and data.files".into(),
            ))
        }
    };
    fp.num_nodes = ds.num_nodes();
    fp.num_timesteps = ds.num_timesteps();
    fp.sha256 = content_hash(&ds)?;
    Ok((ds, fp))
}

/// Everything a model run needs, identical across models of one invocation.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub ctx: GraphContext,
    /// Windowed samples in raw units, chronologically split.
    pub raw: Splits<WindowedSample>,
    /// The same splits with inputs z-scored by `normalizer`; targets stay raw.
    pub splits: Splits<WindowedSample>,
    pub normalizer: Normalizer,
    pub fingerprint: DatasetFingerprint,
    pub input_dim: usize,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    cfg.validate()?;
    let (ds, fingerprint) = load(cfg)?;
    let windows = make_windows(&ds, cfg.window)?;
    let raw = split(windows, &cfg.split)?;
    if raw.train.is_empty() || raw.val.is_empty() || raw.test.is_empty() {
        return Err(CliError::Config(format!(
            "{} timesteps with window {} leave an empty split ({}/{}/{})",
            ds.num_timesteps(),
            cfg.window,
            raw.train.len(),
            raw.val.len(),
            raw.test.len()
        )));
    }
    let normalizer = fit_normalizer(&raw.train, ds.num_channels())?;
    let splits = Splits {
        train: normalizer.apply(&raw.train)?,
        val: normalizer.apply(&raw.val)?,
        test: normalizer.apply(&raw.test)?,
    };
    Ok(Prepared {
        ctx: GraphContext::new(ds.graph())?,
        raw,
        splits,
        normalizer,
        input_dim: cfg.window * ds.num_channels(),
        fingerprint,
    })
}
