use thiserror::Error;

/// Errors raised by pointwise constitutive functions.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EnergyError {
    #[error("barrier blow-up: argument {0} outside admissible range")]
    BarrierBlowup(f64),
    #[error("negative concentration {0}")]
    NegativeConcentration(f64),
    #[error("non-positive coefficient {name} = {value}")]
    NonpositiveCoefficient { name: &'static str, value: f64 },
}

/// Errors raised while validating parameters.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParamError {
    #[error("triangle condition violated: Sigma{index} = {value} <= 0")]
    TriangleViolation { index: usize, value: f64 },
    #[error("alpha must be non-negative (got {0})")]
    NegativeAlpha(f64),
    #[error("{0}")]
    Invalid(String),
    #[error("{}", .0.join("; "))]
    Many(Vec<String>),
}

/// Errors raised by the configuration parser.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("io: {0}")]
    Io(String),
}

/// Errors raised by boundary handling and snapshot IO.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("unsupported boundary condition: {0}")]
    UnsupportedBc(String),
    #[error("grid: {0}")]
    BadGrid(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Errors raised by linear solvers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("{what}: no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { what: &'static str, iters: usize, residual: f64 },
    #[error("{0}: non-finite value encountered")]
    NonFinite(&'static str),
}

/// Errors raised by a time step. `StepRejected` may be retried with a smaller dt.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum StepError {
    #[error("step rejected: {0}")]
    StepRejected(String),
    #[error("pressure solve failed: {0}")]
    PoissonNonconvergence(SolverError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

impl From<SolverError> for StepError {
    fn from(e: SolverError) -> Self {
        StepError::StepRejected(e.to_string())
    }
}

/// Errors raised by scenario drivers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScenarioError {
    #[error("not stationary after {steps} steps (change rate {rate:e})")]
    NonStationary { steps: usize, rate: f64 },
    #[error("front left the domain")]
    FrontLost,
    #[error("triple point not found")]
    TriplePointNotFound,
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error("solver abort: {0}")]
    Abort(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("bad initial condition: {0}")]
    BadInitialSpec(String),
}
