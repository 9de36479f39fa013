use thiserror::Error;

use crate::rational::Rational;

/// A cell `[lo, hi)` of a coverage step function whose count is wrong.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct BadCell {
    pub lo: Rational,
    pub hi: Rational,
    /// `"domain"` or `"image"`.
    pub side: &'static str,
    pub count: u64,
}

/// Serializes as `{"kind": <variant>, "details": <fields>}`.
#[derive(Debug, Error, serde::Serialize)]
#[serde(tag = "kind", content = "details")]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid atom: {0}")]
    InvalidAtom(String),

    #[error("overlap: {0}")]
    Overlap(String),

    #[error("not a doubly stochastic element of multiplicity {multiplicity}: {} bad cells", cells.len())]
    InvalidDse {
        multiplicity: u64,
        cells: Vec<BadCell>,
    },

    #[error("multiplicity mismatch: {0} vs {1}")]
    MultiplicityMismatch(u64, u64),

    #[error("not doubly stochastic: {0}")]
    NotDoublyStochastic(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid extension: {0}")]
    InvalidExtension(String),

    #[error("piece is already defined on the whole space")]
    AlreadyFull,

    #[error("no progress: {0}")]
    NoProgress(String),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("identity-type family with odd multiplicity {multiplicity} on [{lo}, {hi})")]
    UnsplittableDiagonal {
        lo: Rational,
        hi: Rational,
        multiplicity: u64,
    },

    #[error("graph multiset is not symmetric")]
    NotSymmetric,

    #[error("invalid better path: {0}")]
    InvalidPath(String),

    #[error("division already has zero error")]
    AlreadyPerfect,

    #[error("not cell-aligned at level {level}: {} offending atoms", atoms.len())]
    NotCellAligned { level: u32, atoms: Vec<String> },

    #[error("not a permutation: {0}")]
    NotPermutation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("mass mismatch: expected {expected}, got {actual}")]
    MassMismatch {
        expected: Rational,
        actual: Rational,
    },

    #[error("orbit escapes the domain at iterate {step} (point {point})")]
    OrbitEscapes { step: usize, point: Rational },
}

pub type Result<T> = std::result::Result<T, Error>;
