//! Exact ball-packing invariants of rational ruled symplectic 4-manifolds.
//!
//! The crate decides symplectic-cone membership for blow-ups of the complex
//! projective plane by Cremona reduction, and computes generalized Gromov
//! widths, packing numbers, stability numbers, obstructing exceptional
//! classes, and ECH capacity comparisons for the trivial and twisted ruled
//! bundles, all in exact arithmetic.
//!
//! ```
//! use ballpack::exact::rat;
//! use ballpack::reduce::{ball_vector, reduce, BundleSpec, Verdict, DEFAULT_MAX_ITER};
//! use ballpack::widths::width_at;
//!
//! // eight balls in S^2 x S^2 with section area 2: the width is 12/17
//! let spec = BundleSpec::trivial(rat(2, 1))?;
//! let width = width_at(&spec, 8)?;
//! assert_eq!(width.to_string(), "12/17");
//!
//! // at that capacity the configuration sits on the cone boundary
//! let v = ball_vector(&spec, 8, &rat(12, 17))?;
//! assert_eq!(reduce(&v, DEFAULT_MAX_ITER)?.verdict, Verdict::Boundary);
//! # Ok::<(), ballpack::Error>(())
//! ```

use num_bigint::BigInt;

pub mod e8;
pub mod ech;
pub mod emit;
pub mod exact;
pub mod lattice;
pub mod reduce;
pub mod seq;
pub mod verify;
pub mod widths;

pub use exact::{QuadExt, Rational};
pub use lattice::{HClass, Move, MoveWord};
pub use reduce::{BundleKind, BundleSpec, ReductionOutcome, Verdict};
pub use widths::{PieceFormula, WidthPiece, WidthProfile};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported radicand mix: sqrt({0}) with sqrt({1})")]
    RadicandMix(BigInt, BigInt),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("a class needs at least 3 blow-up coefficients, got {0}")]
    TooFewEntries(usize),
    #[error("reflection root must have nonzero self-intersection")]
    NullRoot,
    #[error("iteration budget exhausted after {0} Cremona moves")]
    IterationBudget(u64),
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
