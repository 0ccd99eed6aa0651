use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh capacity exceeded: {required} elements required (nx = {nx}, ny = {ny}), cap is {cap}")]
    Capacity {
        required: usize,
        nx: usize,
        ny: usize,
        cap: usize,
    },

    #[error("boundary tag {0} does not occur in the mesh")]
    UnknownTag(String),

    #[error("invalid constraint set: {0}")]
    Constraint(String),

    #[error("load vector is incompatible with the singular operator (relative sum {relative_sum:.3e})")]
    IncompatibleLoad { relative_sum: f64 },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {:.3e})", .history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { iterations: usize, history: Vec<f64> },

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
