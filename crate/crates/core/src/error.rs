use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("not a permutation: {0}")]
    NotAPermutation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{what} budget exceeded: {value} > {cap}")]
    Budget {
        what: &'static str,
        value: u64,
        cap: u64,
    },
    #[error("partition {0} is not finer than {1}")]
    NotRefinement(String, String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("flavor mismatch")]
    FlavorMismatch,
    #[error("missing table entry: {0}")]
    Missing(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
