//! Run configuration: one TOML document, overridable from the command line.
//!
//! ```toml
//! window = 6
//!
//! [data.synthetic]          # or [data.files] with `graph` and `features`
//! num_nodes = 100
//! num_timesteps = 500
//! topology = "random_geometric"
//! diffusion_rate = 0.3
//! daily_period = 24
//! noise_std = 0.1
//! seed = 1
//!
//! [split]
//! train_frac = 0.7
//! val_frac = 0.15
//! test_frac = 0.15
//!
//! [train]
//! learning_rate = 0.01
//! batch_size = 8
//! max_epochs = 50
//! patience = 10
//!
//! [models.gcn]
//! num_layers = 2
//! hidden_dim = 16
//!
//! [compare]
//! models = ["gcn", "sage", "ggnn"]
//! ```
//!
//! Precedence is flags, then file, then built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use roadgnn::datasets::{SplitSpec, SyntheticConfig};
use roadgnn::models::{Aggregator, Architecture, GcnConfig, GgnnConfig, ModelSpec, SageConfig};
use roadgnn::training::TrainConfig;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub graph: PathBuf,
    pub features: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<FileSource>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gcn,
    Sage,
    Ggnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gcn, ModelKind::Sage, ModelKind::Ggnn];

    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::Sage => "sage",
            ModelKind::Ggnn => "ggnn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(ModelKind::Gcn),
            "sage" | "graphsage" => Ok(ModelKind::Sage),
            "ggnn" => Ok(ModelKind::Ggnn),
            other => Err(format!("unknown model {other:?} (expected gcn, sage or ggnn)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    pub gcn: GcnConfig,
    pub sage: SageConfig,
    pub ggnn: GgnnConfig,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            gcn: GcnConfig {
                num_layers: 2,
                hidden_dim: 16,
                dropout_rate: 0.0,
            },
            sage: SageConfig {
                num_layers: 2,
                hidden_dim: 16,
                fanouts: vec![10, 10],
                aggregator: Aggregator::Mean,
            },
            ggnn: GgnnConfig {
                num_steps: 3,
                hidden_dim: 16,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    /// Requested order.
    Config,
    /// Ascending RMSE, ties broken by MAE then name.
    #[default]
    Rmse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub models: Vec<ModelKind>,
    pub sort: SortOrder,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            models: ModelKind::ALL.to_vec(),
            sort: SortOrder::Rmse,
        }
    }
}

fn default_window() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_data")]
    pub data: DataConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default = "default_train")]
    pub train: TrainConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    /// Output directory. Not part of the echoed configuration.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

fn default_data() -> DataConfig {
    DataConfig {
        synthetic: Some(SyntheticConfig::default()),
        files: None,
    }
}

fn default_train() -> TrainConfig {
    TrainConfig {
        max_epochs: 50,
        ..TrainConfig::default()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window: default_window(),
            data: default_data(),
            split: SplitSpec::default(),
            train: default_train(),
            models: ModelsConfig::default(),
            compare: CompareConfig::default(),
            out: None,
        }
    }
}

/// Command-line overrides, applied after the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    /// Reads and validates a config file. Relative data paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        if let Some(files) = &mut cfg.data.files {
            let base = path.parent().unwrap_or(Path::new(""));
            if files.graph.is_relative() {
                files.graph = base.join(&files.graph);
            }
            if files.features.is_relative() {
                files.features = base.join(&files.features);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.train.seed = seed;
            if let Some(s) = &mut self.data.synthetic {
                s.seed = seed;
            }
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, e: roadgnn::Error| CliError::Config(format!("[{name}] {e}"));
        match (&self.data.synthetic, &self.data.files) {
            (Some(s), None) => s.validate().map_err(|e| field("data.synthetic", e))?,
            (None, Some(_)) => {}
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "[data] give exactly one of data.synthetic and data.files, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "[data] give exactly one of data.synthetic and data.files".into(),
                ))
            }
        }
        if self.window == 0 {
            return Err(CliError::Config("window must be positive".into()));
        }
        self.split.validate().map_err(|e| field("split", e))?;
        self.train.validate().map_err(|e| field("train", e))?;
        for kind in ModelKind::ALL {
            self.model_spec(kind, 1)
                .validate()
                .map_err(|e| field(&format!("models.{}", kind.key()), e))?;
        }
        if self.compare.models.is_empty() {
            return Err(CliError::Config("[compare] models must name at least one model".into()));
        }
        let mut seen = self.compare.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.compare.models.len() {
            return Err(CliError::Config("[compare] models lists a model twice".into()));
        }
        Ok(())
    }

    pub fn model_spec(&self, kind: ModelKind, input_dim: usize) -> ModelSpec {
        let arch = match kind {
            ModelKind::Gcn => Architecture::Gcn(self.models.gcn.clone()),
            ModelKind::Sage => Architecture::Sage(self.models.sage.clone()),
            ModelKind::Ggnn => Architecture::Ggnn(self.models.ggnn.clone()),
        };
        ModelSpec::new(input_dim, arch)
    }

    /// The configuration as JSON, for embedding in artifacts.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}
