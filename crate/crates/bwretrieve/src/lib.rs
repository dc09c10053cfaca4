//! Phase retrieval from magnitude measurements y_i = |a_i^T u*| by a
//! Newton-type fixed-point iteration in whitened coordinates with a shrinking
//! smoothing level.
//!
//! Module map:
//! - [`sensing`]: Gaussian ensembles, Cholesky whitening, measurement
//!   synthesis, and a binary dump codec.
//! - [`objective`]: amplitude loss and its norm-scaled smoothed family, with
//!   analytic gradients and Hessians.
//! - [`bures`]: transport distance between PSD matrices, its rank-one closed
//!   form, and the barycenter objective the iteration descends.
//! - [`smoothing`]: fixed, oracle, loss-based, and quantile-based schedules
//!   for the smoothing level.
//! - [`solver`]: spectral/random initializers, the smoothed step, and the
//!   full run loop with stopping rules and traces.
//! - [`verify`]: independent oracles (finite differences, eigensolves,
//!   brute-force scans) packaged as verification suites.
//! - [`harness`]: configuration, seeded trial orchestration, and CSV output
//!   behind the `bwretrieve` binary.

pub mod bures;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod sensing;
pub mod smoothing;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
