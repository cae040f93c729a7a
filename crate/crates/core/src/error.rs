use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("symmetric eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("cross-covariance is rank deficient (eigenvalue ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("ill-posed alignment: weights do not couple the two sets (eigenvalue ratio {ratio:e})")]
    IllPosed { ratio: f64 },

    #[error("source points carry no weighted spread; scale is undefined")]
    DegenerateSource,

    #[error("point set has zero spread")]
    DegenerateSet,

    #[error("pair table has zero total weight")]
    ZeroWeightMass,

    #[error("every pair was pruned")]
    AllPairsPruned,

    #[error("no alignment succeeded")]
    NoAlignment,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension {0} outside the supported range")]
    UnsupportedDimension(usize),

    #[error("pair ({i}, {k}) out of range for sets of size {n_u} and {n_v}")]
    IndexOutOfRange { i: usize, k: usize, n_u: usize, n_v: usize },

    #[error("invalid weight {0}: weights must be finite and nonnegative")]
    InvalidWeight(f64),

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the failures that reflect the input geometry or weights
    /// rather than malformed files or flags.
    pub fn is_ill_posed(&self) -> bool {
        matches!(
            self,
            Error::IllPosed { .. } | Error::RankDeficient { .. } | Error::DegenerateSource
        )
    }
}
