use thiserror::Error;

/// Errors produced by the geometric primitives, solvers and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid line: {0}")]
    InvalidLine(String),
    #[error("invalid circle: {0}")]
    InvalidCircle(String),
    #[error("line is inconsistent with the cylinder direction (|pi2| / |Pi| = {ratio:.3e})")]
    DirectionInconsistent { ratio: f64 },
    #[error("dual conic is degenerate (circle center at infinity)")]
    DegenerateConic,
    #[error("dual conic describes an imaginary circle (r^2 = {r_squared:.3e})")]
    ImaginaryRadius { r_squared: f64 },
    #[error("constraint system is rank deficient")]
    RankDeficient,
    #[error("no consensus: best hypothesis has {best} inliers, {required} required")]
    NoConsensus { best: usize, required: usize },
    #[error("lines are in a degenerate configuration")]
    DegenerateLines,
    #[error("polynomial system does not have a finite solution set")]
    NonFiniteSolutionSet,
    #[error("no real circle among the solutions")]
    NoRealCircle,
    #[error("linear elimination of the stationary system is singular")]
    EliminationSingular,
    #[error("not enough lines: {required} required, {got} given")]
    NotEnoughLines { required: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
