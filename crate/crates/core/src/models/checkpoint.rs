//! JSON checkpoints.
//!
//! Floats are stored as the 16-hex-digit image of their IEEE-754 bits so a
//! write/read cycle is exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelParams, ModelSpec};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, Parameter};

pub const CHECKPOINT_FORMAT: &str = "roadgnn-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredParameter {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values, each as the lowercase hex of `f64::to_bits`.
    pub data: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub spec: ModelSpec,
    pub parameters: Vec<StoredParameter>,
    /// Free-form provenance (run configuration, dataset fingerprint).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn from_model(model: &Model, meta: serde_json::Value) -> Self {
        let parameters = model
            .params
            .iter()
            .map(|p| StoredParameter {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                data: p
                    .value
                    .as_slice()
                    .iter()
                    .map(|x| format!("{:016x}", x.to_bits()))
                    .collect(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            spec: model.spec().clone(),
            parameters,
            meta,
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Validation(format!(
                "unsupported checkpoint format {:?}",
                self.format
            )));
        }
        let params = self
            .parameters
            .into_iter()
            .map(|sp| {
                let data = sp
                    .data
                    .iter()
                    .map(|s| {
                        u64::from_str_radix(s, 16)
                            .map(f64::from_bits)
                            .map_err(|e| {
                                Error::Validation(format!("parameter {}: bad value {s:?}: {e}", sp.name))
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Parameter::new(sp.name, Matrix::from_vec(sp.rows, sp.cols, data)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Model::from_parts(self.spec, ModelParams::new(params)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialisation cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<checkpoint>".into(),
            reason: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}
