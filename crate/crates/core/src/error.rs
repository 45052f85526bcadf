use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("cannot parse rational number {0:?}")]
    ParseRational(String),

    #[error("matrix {matrix} is not tropical Metzler: entry ({i}, {j}) is tropically positive")]
    NotMetzler { matrix: usize, i: usize, j: usize },

    #[error("game construction impossible: {0}")]
    AssumptionViolated(String),

    #[error("state set {0:?} is not a dominion")]
    NotADominion(Vec<usize>),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("policy space has {size} pairs, above the cap of {cap}")]
    PolicySpaceTooLarge { size: u128, cap: u128 },

    #[error("dominion enumeration over {n} states exceeds the cap of {cap}")]
    DominionEnumerationTooLarge { n: usize, cap: usize },

    #[error("saddle point check failed: {0}")]
    SaddleCheckFailed(String),

    #[error("certificate rejected: {0}")]
    CertificateInvalid(String),

    #[error("perturbation bound {delta} is not below |lambda| = {lambda}")]
    DeltaTooLarge { delta: String, lambda: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
