use thiserror::Error;

/// Errors raised anywhere in the CSK toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CskError {
    #[error("malformed law spec `{spec}`: {reason}")]
    MalformedSpec { spec: String, reason: String },

    #[error("unknown law `{0}`")]
    UnknownLaw(String),

    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("{what}: argument {value} outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {value}, error {error})")]
    NonConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("variance undefined for this family (m0 = -inf)")]
    VarianceUndefined,

    #[error("cannot extend the family: the companion set is empty for every mean")]
    NoExtension,

    #[error("no companion mean for m = {0}")]
    NoCompanion(f64),

    #[error("{0} requires a closed-form pseudo-variance")]
    ClosedFormRequired(&'static str),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("negative density of the tilted member at m = {m} (kernel ratio {ratio})")]
    NegativeDensity { m: f64, ratio: f64 },

    #[error("free-power scaling mismatch: computed {computed}, expected {expected}")]
    ScalingMismatch { computed: f64, expected: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CskError {
    pub(crate) fn domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        CskError::Domain {
            what,
            value,
            domain: format!("({lo}, {hi})"),
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            CskError::NonConvergence { .. } | CskError::Bracketing(_) | CskError::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CskError>;
