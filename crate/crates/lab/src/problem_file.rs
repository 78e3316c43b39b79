//! JSON problem files.

use std::path::Path;

use crossing_core::expr::{Expr, ExprError};
use crossing_core::problem::{Channel, Flatten, ProblemSpec, Side};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideName {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ChannelName {
    V1,
    V2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlattenEntry {
    pub side: SideName,
    pub which: ChannelName,
    pub start: f64,
    pub limit: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "V1")]
    pub v1: String,
    #[serde(rename = "V2")]
    pub v2: String,
    pub r0: String,
    #[serde(default = "zero_text")]
    pub r1: String,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub delta0: f64,
    #[serde(rename = "box")]
    pub domain: [f64; 2],
    #[serde(default)]
    pub flatten: Vec<FlattenEntry>,
}

fn zero_text() -> String {
    "0".to_string()
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field {field}: {source}")]
    Expr {
        field: &'static str,
        source: ExprError,
    },
}

impl ProblemFile {
    pub fn to_spec(&self) -> Result<ProblemSpec, ProblemFileError> {
        let parse = |field: &'static str, text: &str| {
            Expr::parse(text).map_err(|source| ProblemFileError::Expr { field, source })
        };
        Ok(ProblemSpec {
            v1: parse("V1", &self.v1)?,
            v2: parse("V2", &self.v2)?,
            r0: parse("r0", &self.r0)?,
            r1: parse("r1", &self.r1)?,
            e0: self.e0,
            delta0: self.delta0,
            domain: self.domain,
            flatten: self
                .flatten
                .iter()
                .map(|f| Flatten {
                    side: match f.side {
                        SideName::Left => Side::Left,
                        SideName::Right => Side::Right,
                    },
                    which: match f.which {
                        ChannelName::V1 => Channel::V1,
                        ChannelName::V2 => Channel::V2,
                    },
                    start: f.start,
                    limit: f.limit,
                    width: f.width,
                })
                .collect(),
        })
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        ProblemFile {
            v1: spec.v1.to_string(),
            v2: spec.v2.to_string(),
            r0: spec.r0.to_string(),
            r1: spec.r1.to_string(),
            e0: spec.e0,
            delta0: spec.delta0,
            domain: spec.domain,
            flatten: spec
                .flatten
                .iter()
                .map(|f| FlattenEntry {
                    side: match f.side {
                        Side::Left => SideName::Left,
                        Side::Right => SideName::Right,
                    },
                    which: match f.which {
                        Channel::V1 => ChannelName::V1,
                        Channel::V2 => ChannelName::V2,
                    },
                    start: f.start,
                    limit: f.limit,
                    width: f.width,
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ProblemFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }
}

pub fn load(path: &Path) -> Result<(ProblemFile, ProblemSpec), ProblemFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = ProblemFile::parse(&text)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}
