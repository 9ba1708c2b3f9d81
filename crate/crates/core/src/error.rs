use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{sequence} is not strictly increasing at index {index}")]
    NonMonotone { sequence: &'static str, index: usize },

    #[error("level {requested} is beyond the available {available} levels")]
    LevelOutOfRange { requested: usize, available: usize },

    #[error("intra-sphere distance not sphere-determined (sphere {0})")]
    IntraSphereDistance(usize),

    #[error("empty tree description")]
    EmptyTree,

    #[error("tree leaves are at unequal depths ({0} and {1})")]
    UnbalancedTree(usize, usize),

    #[error("tree has {leaves} leaves, above the dense budget of {budget}")]
    TreeTooLarge { leaves: usize, budget: usize },

    #[error("series tail bound {bound:e} does not reach tolerance {tol:e}")]
    TailBound { bound: f64, tol: f64 },

    #[error("evaluation point {point} is within pole proximity of -lambda_{index}")]
    PoleProximity { point: String, index: usize },

    #[error("no sign change bracketing pole {index}: {reason}")]
    Bracket { index: usize, reason: String },

    #[error("only {available} poles available, achievable tail bound {achievable:e} > {tol:e}")]
    InsufficientPoles {
        available: usize,
        achievable: f64,
        tol: f64,
    },

    #[error("asymptotic law requires alpha*xi > theta (got alpha*xi = {alpha_xi}, theta = {theta})")]
    HypothesisViolation { alpha_xi: f64, theta: f64 },

    #[error("coefficient sequence does not look square-summable (|c_i| growing over the last 8 terms)")]
    NotSquareSummable,

    #[error("decay witness violated at index {index}")]
    DecayWitness { index: usize },

    #[error("sample set rejected: {0}")]
    Samples(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("Gamma function pole at {0}")]
    GammaPole(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
