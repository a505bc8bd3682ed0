//! Wide one-hidden-layer random networks on the sphere `√d·S^{d−1}` and
//! their Gaussian-process limits.
//!
//! * [`orthopoly`]: the coordinate density, Gegenbauer and Hermite bases,
//!   activation expansions.
//! * [`harmonics`]: explicit spherical harmonics as polynomials, rotation
//!   generators, and the Stein kernel built from tangent gradients.
//! * [`netsim`]: network simulation, the limiting GP covariance, GP sampling.
//! * [`bounds`]: closed-form discrepancy and Wasserstein bounds.
//! * [`transport`]: Bures, exact-assignment and Sinkhorn 2-Wasserstein.
//! * [`experiment`]: the Stein-identity suite and the convergence-rate sweep.

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod harmonics;
pub mod netsim;
pub mod orthopoly;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
