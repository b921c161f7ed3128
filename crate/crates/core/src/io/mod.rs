//! File formats: centerline CSV, JSON run specs and synthetic track recipes.

mod centerline;
mod spec;
mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::GeometryError;

pub use centerline::{
    parse_centerline, read_centerline, write_centerline, write_series, Centerline,
};
pub use spec::{parse_spec, read_spec, SpecFile};
pub use synth::{parse_recipe, read_recipe, synth_track, Primitive, SynthRecipe, SyntheticTrack};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    /// Well-formed document whose contents violate the schema or an invariant.
    #[error("invalid {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot write an empty polyline")]
    Empty,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn invalid(path: impl Into<String>, message: impl ToString) -> Self {
        Self::Invalid {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Deserializes JSON, reporting schema errors with the offending field path.
    pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_data() {
                Self::invalid(path, inner)
            } else {
                Self::Json(inner.to_string())
            }
        })
    }
}
