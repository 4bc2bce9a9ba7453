use std::collections::BTreeSet;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix word: {0}")]
    InvalidWord(String),

    #[error("degenerate cocycle: cyclic product is numerically singular")]
    DegenerateCocycle,

    #[error("index {index} is outside the open range (0, {dim})")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid splitting: {0}")]
    InvalidSplitting(String),

    #[error("splitting not certified: cut at index {index} is not dominated")]
    SplittingNotCertified { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid tangency data: violates {0}")]
    InvalidTangency(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("not Eulerian")]
    NotEulerian,

    #[error("node `{0}` has no linear model")]
    MissingLinearModel(String),

    #[error("invalid trail: {0}")]
    InvalidTrail(String),

    #[error("indices not witnessed by any obstruction: {uncovered:?}")]
    UnwitnessedIndices { uncovered: BTreeSet<usize> },

    #[error("edge `{0}` is not a loop")]
    NotALoop(String),

    #[error("invalid Lyapunov map: {0}")]
    InvalidLyapunovMap(String),

    #[error("exponents must be ascending")]
    ExponentsNotAscending,

    #[error("index set must contain 0 and {dim}; missing {missing}")]
    MissingPinnedIndex { missing: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("polytope unbounded: {} recession ray(s)", rays.len())]
    PolytopeUnbounded { rays: Vec<Vec<f64>> },

    #[error("target outside polytope: violates {0}")]
    OutsidePolytope(String),

    #[error("unreachable within model: {0}")]
    UnreachableWithinModel(String),

    #[error("unreachable within cap: word would exceed {cap} matrices")]
    UnreachableWithinCap { cap: usize },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("not a saddle: {0}")]
    NotASaddle(String),

    #[error("eigendirection degenerate: {0}")]
    DegenerateEigendirection(String),
}
