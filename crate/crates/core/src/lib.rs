//! Obstruction patterns and obstruction sets for large dilates.
//!
//! The crate builds finite patterns `P` together with positive-density sets
//! `E` such that `E` contains no isometric copy of `r P` for an unbounded
//! sequence of scales `r`, and verifies the constructions at desk scale.
//!
//! Layout:
//!
//! - [`torus`], [`discrepancy`], [`weyl`]: arithmetic on `T = R/Z`, exact
//!   interval discrepancy, exponential sums and the Erdős–Turán bound.
//! - [`poly`], [`primes`], [`pattern`], [`nets`]: polynomial sequences mod 1,
//!   the random thinning construction, the square-root construction and the
//!   hitting verifiers.
//! - [`annulus`], [`measure`], [`reduction`]: annular obstruction sets, their
//!   densities, and end-to-end no-copy checks.
//! - [`lp`], [`cross`]: `ℓ^p` geometry and the axis-cross configuration.

pub mod annulus;
pub mod cross;
pub mod discrepancy;
pub mod error;
pub mod lp;
pub mod measure;
pub mod nets;
pub mod pattern;
pub mod poly;
pub mod precise;
pub mod primes;
pub mod reduction;
pub mod seeds;
pub mod torus;
pub mod weyl;

pub use error::{Error, Result};
pub use poly::{Leading, PolySeq, Ratio};
pub use torus::{Closure, TorusInterval, TorusPoint};
