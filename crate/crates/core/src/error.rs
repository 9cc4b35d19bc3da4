use thiserror::Error;

use crate::modular::GroupElement;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("epsilon_d is only defined for odd d, got {0}")]
    EvenEps(i64),

    #[error("matrix {matrix} is not in Gamma0({level})")]
    NotInGamma0 { matrix: GroupElement, level: u64 },

    #[error("matrix {0} has non-positive determinant")]
    NotInvertible(GroupElement),

    #[error("matrix {matrix} is not in A0(2N) for N = {n}: {reason}")]
    NotInNormalizer {
        matrix: GroupElement,
        n: u64,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("q-expansion offsets {0} and {1} differ by a non-integer")]
    OffsetMisaligned(String, String),

    #[error("negative leading exponent {0}: not holomorphic at infinity")]
    NegativeOffset(String),

    #[error("schema violation in field `{field}`: {msg}")]
    Schema { field: String, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{p} is not coprime to the level {level}")]
    NotCoprime { p: u64, level: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("exact Hecke operators need a real (quadratic or trivial) character")]
    NonRealCharacter,

    #[error("missing Hecke eigenvalue for l = {0}")]
    MissingTau(u64),

    #[error("Hecke relation {identity} violated at p = {p}: residual {residual:e}")]
    RelationViolated {
        identity: &'static str,
        p: u64,
        residual: f64,
    },

    #[error("enumeration budget exceeded: {candidates} candidates (limit {limit}); use a smaller delta or determinant")]
    EnumerationBudget { candidates: u64, limit: u64 },

    #[error("point {point} is outside F(2N) for N = {n}: {witness}")]
    OutsideFundamentalSet {
        point: String,
        n: u64,
        witness: String,
    },

    #[error("reduction did not terminate after {moves} moves")]
    ReductionDiverged { moves: usize, trace: Vec<String> },

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, target {target:e}")]
    QuadratureNotConverged { achieved: f64, target: f64 },

    #[error("kernel tail bound {bound:e} above tolerance {tol:e}; try truncation radius U >= {suggested_u}")]
    TailTooLarge { bound: f64, tol: f64, suggested_u: f64 },

    #[error("Im z = {y:e} is below the certified evaluation floor {y_min:e} for precision {precision}")]
    BelowEvaluationFloor { y: f64, y_min: f64, precision: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    /// Name of the module an error originates from, used to tag CLI
    /// diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::EvenEps(_)
            | Error::NotInGamma0 { .. }
            | Error::NotInvertible(_)
            | Error::NotInNormalizer { .. } => "modular-arith",
            Error::OffsetMisaligned(..) | Error::NegativeOffset(_) | Error::Schema { .. } => "qexp",
            Error::NotCoprime { .. } | Error::NotPrime(_) | Error::NonRealCharacter => "hecke",
            Error::MissingTau(_) | Error::RelationViolated { .. } => "amplifier",
            Error::EnumerationBudget { .. } => "latcount",
            Error::OutsideFundamentalSet { .. } | Error::ReductionDiverged { .. } => "geometry",
            Error::QuadratureNotConverged { .. } | Error::TailTooLarge { .. } => "kernel",
            Error::BelowEvaluationFloor { .. } | Error::DegenerateFit(_) => "supnorm",
            Error::InvalidArgument(_) => "config",
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => "io",
        }
    }
}
