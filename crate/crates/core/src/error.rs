use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{quantity} = {value} is outside the flight envelope [{lo}, {hi}]")]
    OutOfEnvelope {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("batch point {index} rejected: {source}")]
    BatchPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("altitude {0} ft is above the tropopause; the troposphere model does not apply")]
    UnsupportedAltitude(f64),

    #[error("cannot draw an empty sample")]
    EmptySample,

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("division domain error: {0}")]
    Domain(String),

    #[error("column `{column}` has zero spread; normalization statistics are degenerate")]
    DegenerateStats { column: &'static str },

    #[error("output column `{column}` has equal lower and upper bounds; drop it from the distance metric")]
    DegenerateBounds { column: &'static str },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("every hyperparameter set failed:\n{}", .0.join("\n"))]
    SweepFailed(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
