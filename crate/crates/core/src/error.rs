use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{0}: no data rows")]
    EmptyFile(String),

    #[error("negative spectrum weight {weight} at {energy} keV")]
    NegativeWeight { energy: f64, weight: f64 },

    #[error("duplicate energy {0} keV")]
    DuplicateEnergy(f64),

    #[error("energies must be strictly increasing ({previous} keV followed by {next} keV)")]
    UnsortedEnergy { previous: f64, next: f64 },

    #[error("spectrum weights sum to zero")]
    ZeroWeights,

    #[error("energy must be positive, got {0} keV")]
    NonPositiveEnergy(f64),

    #[error("energy {energy} keV outside tabulated range [{lo}, {hi}] of `{name}`")]
    EnergyOutOfRange {
        name: String,
        energy: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid material model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-positive intensity {value} at ray {index}")]
    NonPositiveIntensity { index: usize, value: f64 },

    #[error("polyenergetic projection vanishes at ray {0}")]
    ZeroProjection(usize),

    #[error("operator maps the probe vector to zero")]
    ZeroOperator,

    #[error("iterate became non-finite at iteration {0}")]
    NonFiniteIterate(usize),

    #[error("phantom size {0} is below the minimum of 16 pixels")]
    PhantomTooSmall(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
