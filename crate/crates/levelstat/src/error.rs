use thiserror::Error;

/// Everything that can go wrong when building operators or running estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one site")]
    EmptyGraph,

    #[error("edge ({x}, {y}) references a site outside 0..{n_sites}")]
    SiteOutOfRange { x: usize, y: usize, n_sites: usize },

    #[error("self-loop at site {site}; on-site terms belong to the potential, not the hopping")]
    SelfLoop { site: usize },

    #[error("edge ({x}, {y}) declared twice with weights that are not conjugate-consistent")]
    InconsistentEdge { x: usize, y: usize },

    #[error("distribution support is empty: need a < b, got a = {a}, b = {b}")]
    EmptySupport { a: f64, b: f64 },

    #[error("density table is invalid: {reason}")]
    BadTable { reason: String },

    #[error("density table integrates to {integral}, expected 1 within 1e-8")]
    TableNotNormalized { integral: f64 },

    #[error("potential has {got} entries but the graph has {expected} sites")]
    DimensionMismatch { got: usize, expected: usize },

    #[error("interval is empty: need lo < hi, got lo = {lo}, hi = {hi}")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("eigensolver failed to converge on a {n}x{n} matrix")]
    EigenFailed { n: usize },

    #[error("eigenvalue {index} is too close to a neighbor (gap {gap:.3e} <= {min_gap:.3e})")]
    DegenerateLevel { index: usize, gap: f64, min_gap: f64 },

    #[error("profile search would enumerate {count} index assignments (cap {cap})")]
    AssignmentCapExceeded { count: u128, cap: u64 },

    #[error("estimator needs at least one sample")]
    ZeroSamples,

    #[error("site {site} listed more than once")]
    DuplicateSite { site: usize },

    #[error("need {expected} intervals, got {got}")]
    IntervalCountMismatch { got: usize, expected: usize },

    #[error("|E1 - E2| = {gap:.6e} is below the minimal gap 2|c| = {min:.6e}")]
    BelowMinimalGap { gap: f64, min: f64 },

    #[error("targets must be distinct; entries {i} and {j} coincide within {tol:.1e}")]
    TargetsNotDistinct { i: usize, j: usize, tol: f64 },

    #[error("target E_{index} = {value} lies in the spectrum of the frozen subsystem (distance {distance:.3e})")]
    TargetHitsFrozenSpectrum { index: usize, value: f64, distance: f64 },

    #[error("root search found {found} solutions, exceeding the algebraic cap n! = {cap}")]
    CountExceedsFactorial { found: usize, cap: usize },

    #[error("{context}: {reason}")]
    InvalidInput { context: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
