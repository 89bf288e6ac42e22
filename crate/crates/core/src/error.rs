//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed image: {0}")]
    Format(String),
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("image has zero rows or columns")]
    EmptyImage,
    #[error("missing image {}", .0.display())]
    MissingImage(PathBuf),
    #[error("annotation table incomplete: no row for subject {subject} image {image}")]
    IncompleteAnnotation { subject: u32, image: u32 },
    #[error("invalid label {value:?} in column {column} (expected 0 or 1)")]
    Label { column: &'static str, value: String },
    #[error("malformed annotation file: {0}")]
    Annotation(String),
    #[error("image is constant; no threshold separates two classes")]
    DegenerateThreshold,
    #[error("no high-pass region survived filtering")]
    NoRegion,
    #[error("no region satisfies the {0} selection rule")]
    NoCandidate(&'static str),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Symmetry(f64),
    #[error("requested {requested} items but only {available} are available")]
    Range { requested: usize, available: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("embedding failed: {0}")]
    Embed(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 = input error, 3 = annotation error, 4 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IncompleteAnnotation { .. } | Error::Label { .. } | Error::Annotation(_) => 3,
            Error::DegenerateThreshold
            | Error::NoRegion
            | Error::NoCandidate(_)
            | Error::Symmetry(_)
            | Error::Embed(_) => 4,
            _ => 2,
        }
    }
}
