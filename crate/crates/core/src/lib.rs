//! Exact dynamics of gap populations across stages of Eratosthenes sieve.
//!
//! The library has four working parts:
//!
//! * [`gapcycle`] enumerates the cycle of gaps `G(p#)` between consecutive
//!   totatives of a primorial, either materialized (small `p`) or as a
//!   wheel-extension stream, and takes exact censuses of runs of consecutive
//!   gaps by (span, length).
//! * [`dynsys`] advances censuses across sieve stages with the exact update
//!   rule, extracts closed-form relative-population models per gap, and
//!   evaluates them anywhere from the census anchor out to asymptopia,
//!   together with the `lambda` stage parameter and its inverse.
//! * [`residue`] groups gaps (and last-digit pairs) into residue classes for
//!   an arbitrary base and builds team tables in expected, asymptotic, model,
//!   and empirical forms.
//! * [`primecount`] is a segmented prime sieve plus the consecutive-prime
//!   pair census used to reproduce published last-digit counts empirically.

pub mod constants;
pub mod dynsys;
pub mod error;
pub mod fileio;
pub mod gapcycle;
pub mod numfmt;
pub mod primecount;
pub mod primes;
pub mod residue;

pub use error::{Error, Result};

/// Resource ceilings shared by the enumeration and sieve paths.
///
/// The defaults cover everything the short-mode reproductions need: cycles
/// materialize up to `G(23#)` (36.5M gaps), streams reach `G(37#)`
/// (~1.1e12 gaps, the long mode), and the sieve covers pair censuses to
/// x = 4e9.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest phi(p#) for which a cycle may be held in memory.
    pub materialize_max_phi: u64,
    /// Largest phi(p#) a streaming pass may traverse.
    pub stream_max_phi: u64,
    /// Largest integer the segmented sieve may visit.
    pub sieve_max: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            materialize_max_phi: 50_000_000,
            stream_max_phi: 2_000_000_000_000,
            sieve_max: 4_000_000_000,
        }
    }
}
