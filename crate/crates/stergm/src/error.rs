use thiserror::Error;

/// Coarse failure class, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or unreadable inputs (exit code 1).
    Input,
    /// A documented precondition or model contract was violated (exit code 2).
    Contract,
    /// A numerical procedure failed (exit code 3).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("self-loop at row {row}: actor {actor} trades with itself")]
    SelfLoop { row: usize, actor: String },

    #[error("negative flow value {value} at row {row}")]
    NegativeValue { row: usize, value: f64 },

    #[error("invalid covariate for {subject}: {message}")]
    InvalidCovariate { subject: String, message: String },

    #[error("covariate series for {subject} is entirely missing")]
    AllMissing { subject: String },

    #[error("missing covariate {name} for {subject} at period {period}")]
    MissingCovariate {
        name: String,
        subject: String,
        period: i32,
    },

    #[error("window width must be at least 1, got {0}")]
    InvalidWindowWidth(usize),

    #[error("panel periods are not contiguous: gap between {prev} and {next}")]
    NonContiguousPeriods { prev: i32, next: i32 },

    #[error("period {0} not present in panel")]
    UnknownPeriod(i32),

    #[error("unknown actor id {0}")]
    UnknownActor(String),

    #[error("predecessor chain for actor {0} is cyclic")]
    CyclicPredecessors(String),

    #[error("transition at period {period} has only {count} common actors (need at least 3)")]
    TooFewCommonActors { period: i32, count: usize },

    #[error("networks passed to reconstruction do not share one actor set")]
    ActorSetMismatch,

    #[error("reconstruction containment violated: {0}")]
    ContainmentViolated(&'static str),

    #[error("actor index {index} out of range for network of order {order}")]
    ActorOutOfRange { index: usize, order: usize },

    #[error("statistic requires at least {need} actors, network has {have}")]
    NetworkTooSmall { need: usize, have: usize },

    #[error("spline: {0}")]
    Spline(String),

    #[error("evaluation point {point} outside knot coverage [{lo}, {hi}]")]
    PointOutsideCoverage { point: f64, lo: f64, hi: f64 },

    #[error("model specification invalid: {0}")]
    InvalidSpec(String),

    #[error("unknown term {0}")]
    UnknownTerm(String),

    #[error("term {0} has no coefficient curve")]
    NotACurve(String),

    #[error("design assembly: {0}")]
    Design(String),

    #[error("penalized fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("smoothing selection failed: {0}")]
    SmoothingSelection(String),

    #[error("functional pca: {0}")]
    Fpca(String),

    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("scoring requires both classes present")]
    SingleClass,

    #[error("scoring requires at least one positive label")]
    NoPositives,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Io { .. } | Parse { .. } | SelfLoop { .. } | NegativeValue { .. }
            | InvalidCovariate { .. } | AllMissing { .. } | UnknownActor(_)
            | CyclicPredecessors(_) | Config(_) | Json(_) => ErrorClass::Input,
            MissingCovariate { .. }
            | InvalidWindowWidth(_)
            | NonContiguousPeriods { .. }
            | UnknownPeriod(_)
            | TooFewCommonActors { .. }
            | ActorSetMismatch
            | ContainmentViolated(_)
            | ActorOutOfRange { .. }
            | NetworkTooSmall { .. }
            | Spline(_)
            | PointOutsideCoverage { .. }
            | InvalidSpec(_)
            | UnknownTerm(_)
            | NotACurve(_)
            | Design(_)
            | InsufficientHorizon(_)
            | SingleClass
            | NoPositives => ErrorClass::Contract,
            NoConvergence { .. } | Linalg(_) | SmoothingSelection(_) | Fpca(_) => {
                ErrorClass::Numerical
            }
        }
    }

    /// Exit code convention: 1 input, 2 contract, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Input => 1,
            ErrorClass::Contract => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
