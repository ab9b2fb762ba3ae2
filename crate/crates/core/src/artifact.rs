//! Versioned, text-serialized model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datakit::{Encoder, MinMaxScaler};
use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::neural::StaticNet;
use crate::seq::Lstm;

pub const ARTIFACT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(Error::InvalidConfig(format!("unknown precision {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelArtifact {
    Forest {
        encoder: Encoder,
        model: ForestModel<f64>,
    },
    Mlp {
        encoder: Encoder,
        model: StaticNet<f64>,
    },
    /// Parameters are stored as f64; an f32 model round-trips exactly.
    Lstm {
        scaler: MinMaxScaler,
        precision: Precision,
        model: Lstm<f64>,
    },
}

impl ModelArtifact {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelArtifact::Forest { .. } => "forest",
            ModelArtifact::Mlp { .. } => "mlp",
            ModelArtifact::Lstm { .. } => "lstm",
        }
    }

    pub fn encoder(&self) -> Option<&Encoder> {
        match self {
            ModelArtifact::Forest { encoder, .. } | ModelArtifact::Mlp { encoder, .. } => Some(encoder),
            ModelArtifact::Lstm { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArtifactFile {
    format_version: u32,
    toolkit_version: String,
    artifact: ModelArtifact,
}

pub fn save_artifact(path: &Path, artifact: &ModelArtifact) -> Result<()> {
    let file = ArtifactFile {
        format_version: ARTIFACT_FORMAT,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        artifact: artifact.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<ModelArtifact> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == ARTIFACT_FORMAT as u64 => {}
        other => {
            return Err(Error::IncompatibleArtifact(format!(
                "{}: format_version {other:?}, expected {ARTIFACT_FORMAT}",
                path.display()
            )))
        }
    }
    let file: ArtifactFile =
        serde_json::from_value(value).map_err(|e| Error::IncompatibleArtifact(format!("{}: {e}", path.display())))?;
    Ok(file.artifact)
}
