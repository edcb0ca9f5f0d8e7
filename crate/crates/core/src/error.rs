use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("resource limit exceeded: {what} needs {needed}, budget is {budget}")]
    ResourceLimit {
        what: &'static str,
        needed: u64,
        budget: u64,
    },

    #[error("validity violation: {0}")]
    ValidityViolation(String),

    #[error("{to} is not the next prime after {from}")]
    NonConsecutivePrime { from: u64, to: u64 },

    #[error("degenerate eigen-system for gap {g}: run length {j_max} with first step at {p1}")]
    DegenerateSystem { g: u32, j_max: u32, p1: u64 },

    #[error("gap {0} is not an even integer >= 2")]
    InvalidGap(u64),

    #[error("lambda {0} is outside (0, 1)")]
    OutOfRange(f64),

    #[error("no crossing of the two models on lambda in (0, 1)")]
    NoCrossing,

    #[error("no model provided for gap {0}")]
    IncompleteRoster(u64),

    #[error("unknown census convention `{0}`")]
    UnknownConvention(String),

    #[error("reference class {0} has no members in the census")]
    EmptyReferenceClass(u64),

    #[error("no candidate convention matches the published cells within tolerance")]
    NoConventionMatch,

    #[error("fitted constant for gap {g} is {got}, product over odd prime factors gives {want}")]
    ConstTermMismatch { g: u32, got: String, want: String },

    #[error("malformed file: {0}")]
    MalformedFile(String),
}
