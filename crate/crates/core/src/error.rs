use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bit matrix: {0}")]
    BitMatrix(String),

    #[error("hash with {rows} output rows has rank {rank}; call make_surjective first")]
    NotSurjective { rows: usize, rank: usize },

    #[error("hash maps {n} bits onto {n} bits; no nontrivial dual exists")]
    NoNontrivialDual { n: usize },

    #[error("dual of family member {index}: {source}")]
    FamilyMember {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("enumeration needs {needed} evaluations, cap is {cap}")]
    EnumerationCap { needed: u128, cap: u128 },

    #[error("invalid hash family: {0}")]
    Family(String),

    #[error("certificate invariant violated: {0}")]
    Certificate(String),

    #[error("register error: {0}")]
    Register(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not a sub-normalized state: {0}")]
    InvalidState(String),

    #[error("state is not classical on register {register} in the {basis} basis (deviation {deviation:e})")]
    NotClassical {
        register: String,
        basis: &'static str,
        deviation: f64,
    },

    #[error("support condition violated: {0}")]
    Support(String),

    #[error("SDP failed: {reason} (best gap {best_gap:e} after {iterations} iterations)")]
    Sdp {
        reason: String,
        best_gap: f64,
        iterations: usize,
    },

    #[error("cross-check mismatch in {quantity}: {a} vs {b}")]
    CrossCheck { quantity: String, a: f64, b: f64 },

    #[error(
        "candidate {index} lies outside the smoothing ball (purified distance {distance} > {eps})"
    )]
    OutsideBall {
        index: usize,
        distance: f64,
        eps: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
