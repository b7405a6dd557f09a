//! Exact arithmetic for Artin-Schreier-Witt ramification theory over the
//! local field `K = F_q((t))` of equal characteristic `p`.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`] - finite fields `F_q`, truncated unramified lifts `Z_q / p^M`,
//!   traces, Teichmueller representatives.
//! * [`series`] - truncated Laurent series over any coefficient ring, with
//!   explicit precision tracking, residues and logarithmic derivatives.
//! * [`witt`] - truncated Witt vectors `W_n(R)` via cached universal
//!   polynomials, ghost coordinates, Frobenius and Verschiebung.
//! * [`localfield`] - the finite quotients `K^x / (K^x)^{p^n} U_K^m` used as
//!   the dual side of local duality.
//! * [`asw`] - Artin-Schreier-Witt classes in `H^1(K, Z/p^n)`: reduction to
//!   normal form, ramification filtrations, the symbol `[a, b)` computed by a
//!   ghost-residue formula, and the two conductors whose agreement the
//!   `acceptance` suite certifies.
//! * [`verify`] - seeded randomized law suites shared by `cargo test` and the
//!   CLI `verify` subcommands.
//!
//! All arithmetic is exact: coefficients are residues stored in machine
//! integers, big-integer arithmetic is used while deriving the universal Witt
//! polynomials, and every division along the way is checked for exactness.
//! Values that are only known modulo `O(t^N)` carry their window `N` and all
//! operations propagate it pessimistically; reading past the window is an
//! error, never a silent zero.

pub mod algebra;
pub mod series;
pub mod witt;
pub mod localfield;
pub mod asw;
pub mod verify;

use std::fmt;

/// Laurent series over `F_q`, the ambient field `K = F_q((t))` at finite precision.
pub type KSeries = series::Laurent<algebra::FqField>;
/// The ring object for `K`-valued coefficients inside Witt vectors.
pub type KRing = series::LaurentRing<algebra::FqField>;
/// Laurent series over a truncated lift `Z_q / p^M`.
pub type LiftSeries = series::Laurent<algebra::PadicLiftRing>;
/// Ring object for lifted series.
pub type LiftRing = series::LaurentRing<algebra::PadicLiftRing>;
/// Witt vector with components in `K`.
pub type KWitt = witt::WittVec<KRing>;
/// Witt vector with components in `F_q`.
pub type FqWitt = witt::WittVec<algebra::FqField>;

/// Errors shared across the crate.  Every failure mode is loud and typed;
/// precision problems in particular are never silently absorbed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two values belonging to different rings were combined.
    RingMismatch,
    /// Witt vectors of different lengths were combined.
    LengthMismatch { left: usize, right: usize },
    /// Division by zero, or by a non-unit leading coefficient.
    DivisionByZero,
    /// A coefficient past the precision window was requested.
    InsufficientPrecision { needed: i64, have: i64 },
    /// A ring or field parameter was rejected.
    InvalidParameter(String),
    /// The requested Witt length is outside the supported desk range.
    UnsupportedLength(usize),
    /// A division that must be exact (by `p^i` in a truncated lift) was not.
    InexactDivision,
    /// An enumeration would exceed the desk-scale bound.
    EnumerationBound(String),
    /// An operation required a reduced class but received an unreduced one.
    NotReduced,
    /// Text input could not be parsed; byte position and message.
    Parse { pos: usize, msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::RingMismatch => write!(f, "operands belong to different rings"),
            Error::LengthMismatch { left, right } => {
                write!(f, "Witt length mismatch: {left} vs {right}")
            }
            Error::DivisionByZero => write!(f, "division by zero or non-unit"),
            Error::InsufficientPrecision { needed, have } => {
                write!(f, "insufficient precision: need O(t^{}) but only have O(t^{})", needed, have)
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnsupportedLength(n) => {
                write!(f, "Witt length {n} outside supported range 1..=4")
            }
            Error::InexactDivision => write!(f, "inexact division by a power of p in a truncated lift"),
            Error::EnumerationBound(msg) => write!(f, "enumeration exceeds desk bound: {msg}"),
            Error::NotReduced => write!(f, "operation requires a reduced representative"),
            Error::Parse { pos, msg } => write!(f, "parse error at byte {pos}: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
