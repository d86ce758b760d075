use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("index arity mismatch: expected {expected}, found {found}")]
    IndexArity { expected: usize, found: usize },
    #[error("shift radius {radius} exceeded by {index}")]
    ShiftRadius { radius: i32, index: String },
    #[error("derivative cap {cap} exceeded")]
    DerivativeCap { cap: u8 },
    #[error("missing value for {0}")]
    MissingVariable(String),
    #[error("singular evaluation at `{0}`")]
    Singular(String),
    #[error("chart violation: {0}")]
    ChartViolation(String),
    #[error("no closed form registered for {0}")]
    MissingClosedForm(String),
    #[error("recurrence cannot reach {0}")]
    Unreachable(String),
    #[error("generator {0} is not a variational symmetry of the Lagrangian")]
    NotSymmetry(String),
    #[error("sampling exhausted after {rejections} rejections ({accepted} accepted)")]
    SamplingExhausted { rejections: usize, accepted: usize },
    #[error("support margin {margin} smaller than operator radius {radius}")]
    MarginTooSmall { margin: usize, radius: usize },
    #[error("blow-up at x = {x:.4}: field norm {norm:e}")]
    BlowUp { x: f64, norm: f64 },
    #[error("verification of {check} failed: residual {residual:e} > {tol:e}")]
    Verification { check: String, residual: f64, tol: f64 },
    #[error("unknown {kind} `{name}`")]
    NotRegistered { kind: &'static str, name: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors caused by malformed input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownField(_)
                | Error::UnknownName(_)
                | Error::IndexArity { .. }
                | Error::NotRegistered { .. }
                | Error::Invalid(_)
        )
    }
}
