//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by graph construction, path combinatorics, and the
/// numeric routines built on top of them.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum KgsError {
    /// An adjacency matrix is not square or the matrices disagree in size.
    #[error("adjacency matrix {index} has shape {rows}x{cols}, expected {expected}x{expected}")]
    DimensionMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        expected: usize,
    },

    /// An adjacency entry is negative (entries count edges).
    #[error("adjacency matrix {index} entry ({row},{col}) is {value}; entries must be >= 0")]
    NegativeEntry {
        index: usize,
        row: usize,
        col: usize,
        value: i64,
    },

    /// An iterative routine hit its iteration cap before reaching tolerance.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: String, iterations: u64 },

    /// The power-iteration fixed point is not a joint eigenvector of the
    /// family, which means the matrices do not commute to working precision.
    #[error(
        "ratio (A_{color} x)_v / x_v varies by {spread:e} across vertices; \
         no common Perron eigenvector to tolerance"
    )]
    NotCommonEigenvector { color: usize, spread: f64 },

    /// An enumeration would produce more paths than the configured cap.
    #[error("enumeration at length {len} would produce {count} paths, above the cap {cap}")]
    DepthTooLarge { len: usize, count: u128, cap: u128 },

    /// An integer path count exceeded the supported range.
    #[error("path count overflowed the 128-bit integer range at length {len}")]
    CountOverflow { len: usize },

    /// A path operation required a length divisible by the rank.
    #[error("path length {len} is not a multiple of the rank k = {k}")]
    NotRainbowMultiple { len: usize, k: usize },

    /// Two paths cannot be joined because source and range disagree.
    #[error("cannot join paths: source vertex {source_vertex} != range vertex {range_vertex}")]
    SourceRangeMismatch {
        source_vertex: usize,
        range_vertex: usize,
    },

    /// A path fails its own consistency checks against the graph.
    #[error("invalid path: {reason}")]
    BadPath { reason: String },

    /// The scaling exponent must lie strictly between 0 and 1.
    #[error("delta = {delta} is outside the open interval (0, 1)")]
    InvalidDelta { delta: f64 },

    /// Some colour has spectral radius <= 1, so the weight construction
    /// does not contract along that colour.
    #[error("spectral radius rho_{color} = {rho} is not > 1; weights do not contract")]
    RhoNotContracting { color: usize, rho: f64 },

    /// An operation needs every vertex to have at least two edges of every
    /// colour (so that cylinder weights equal cylinder diameters) and the
    /// graph does not satisfy that.
    #[error("diameter hypothesis fails: matrix {index} row {row} has sum {sum} < 2")]
    DiameterHypothesisFailed { index: usize, row: usize, sum: u64 },

    /// The graph failed a structural validation check required by the
    /// requested operation.
    #[error("graph not admitted: {check} check failed ({detail})")]
    NotAdmitted { check: String, detail: String },

    /// A step-function coefficient vector does not match the path count at
    /// the requested cylinder length.
    #[error("coefficient vector has {got} entries but the cylinder partition has {expected} cells")]
    CoeffCountMismatch { expected: usize, got: usize },

    /// A refinement targeted a coarser partition than the function already
    /// lives on; refinement only goes to longer cylinders.
    #[error("cannot refine a function on length-{have} cylinders to shorter length {want}")]
    RefineShallower { have: usize, want: usize },

    /// A series classification or extrapolation was ambiguous at the probe
    /// depth; the caller should increase the depth rather than trust a guess.
    #[error("undecided: {what}")]
    Undecided { what: String },

    /// A custom alpha sequence does not cover the requested depth.
    #[error("alpha sequence has {have} values but depth {need} is required")]
    AlphaTooShort { have: usize, need: usize },

    /// A custom alpha sequence is not strictly increasing and positive.
    #[error("alpha sequence must be strictly increasing and positive (violated at index {index})")]
    AlphaNotMonotone { index: usize },
}
