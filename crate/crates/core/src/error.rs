use thiserror::Error;

/// Errors raised by parsing, sampling, planning and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("stage `{stage}`: task `{task}` consumes `{label}` which no earlier task produces")]
    DanglingIntertask {
        stage: String,
        task: String,
        label: String,
    },

    #[error("stage `{stage}`: duplicate task id `{task}`")]
    DuplicateTask { stage: String, task: String },

    #[error("stage `{0}` has no tasks")]
    EmptyStage(String),

    #[error("workflow cycle detected through stage `{0}`")]
    Cycle(String),

    #[error("missing descriptor for stage `{stage}`: {reason}")]
    MissingDescriptor { stage: String, reason: String },

    #[error("stage `{stage}` consumes `{label}` which no upstream stage produces")]
    UnproducedInput { stage: String, label: String },

    #[error("unknown stage `{0}` referenced by an edge")]
    UnknownStage(String),

    #[error("missing value for parameter `{0}`")]
    MissingParameter(String),

    #[error("value `{value}` is not a member of parameter `{name}`")]
    InvalidValue { name: String, value: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instances do not share one stage template: {0}")]
    MixedTemplates(String),

    #[error("stage {0} is not present in the tree")]
    AbsentStage(usize),

    #[error("stage {0} is already present in the tree")]
    DuplicateStage(usize),

    #[error("graph needs at least two vertices, got {0}")]
    TooFewVertices(usize),

    #[error("oracle input too large: n = {n} exceeds {limit}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("zero perturbation step")]
    ZeroDelta,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Malformed(_) | Error::Json(_) => "malformed",
            Error::InvalidSpace(_) => "invalid_space",
            Error::DanglingIntertask { .. } => "dangling_intertask",
            Error::DuplicateTask { .. } => "duplicate_task",
            Error::EmptyStage(_) => "empty_stage",
            Error::Cycle(_) => "cycle",
            Error::MissingDescriptor { .. } => "missing_descriptor",
            Error::UnproducedInput { .. } => "unproduced_input",
            Error::UnknownStage(_) => "unknown_stage",
            Error::MissingParameter(_) => "missing_parameter",
            Error::InvalidValue { .. } => "invalid_value",
            Error::InvalidConfig(_) => "invalid_config",
            Error::MixedTemplates(_) => "mixed_templates",
            Error::AbsentStage(_) => "absent_stage",
            Error::DuplicateStage(_) => "duplicate_stage",
            Error::TooFewVertices(_) => "too_few_vertices",
            Error::OracleTooLarge { .. } => "oracle_too_large",
            Error::InvalidPlan(_) => "invalid_plan",
            Error::ZeroDelta => "zero_delta",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
