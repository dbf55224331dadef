use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown builtin algebra `{0}`")]
    UnknownAlgebra(String),

    #[error("unknown automorphism kind `{0}`")]
    UnknownAutomorphism(String),

    #[error("algebra `{0}` has no matrix realization")]
    NoRealization(String),

    #[error("matrix is singular")]
    Singular,

    #[error("not a Lie algebra automorphism: A[e{i},e{j}] != [Ae{i},Ae{j}] ({detail})")]
    NotAutomorphism { i: usize, j: usize, detail: String },

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("arity mismatch: tensor of degree {degree} evaluated on {args} arguments")]
    Arity { degree: usize, args: usize },

    #[error("degenerate dual vector at site {site}: non-degeneracy lambda(p) != 0 violated")]
    DegenerateSite { site: usize },

    #[error("degenerate dual vector at sites {0:?}: non-degeneracy lambda(p) != 0 violated")]
    DegenerateSites(Vec<usize>),

    #[error("representative is not closed (max |D rep| = {0})")]
    NotClosed(String),

    #[error("product of closed representatives is not closed")]
    ProductNotClosed,

    #[error("the model has no product structure")]
    NoProduct,

    #[error("invalid differential graded model: {0}")]
    InvalidModel(String),

    #[error("the bilinear form is degenerate")]
    DegenerateForm,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
