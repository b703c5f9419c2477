use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("multiplier `{label}` is undefined at lambda = {lambda:e}")]
    UndefinedMultiplier { label: String, lambda: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Picard iteration stalled at step {step}: update {update:e} after {iterations} iterations (reduce dt)")]
    PicardDivergence { step: usize, update: f64, iterations: usize },
    #[error("aliasing guard: {0}")]
    Aliasing(String),
    #[error("mass drift {drift:e} exceeds {limit:e} at t = {t}")]
    MassDrift { drift: f64, limit: f64, t: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<LabError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn in_stage(self, stage: &str) -> LabError {
        LabError::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}
