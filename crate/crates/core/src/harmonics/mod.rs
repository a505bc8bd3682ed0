//! Explicit spherical harmonics for small `d`.

pub mod basis;
pub mod poly;
pub mod stein;

pub use basis::{
    addition_theorem_residual, apply_rotation_generator, build_harmonic_basis, harmonic_decompose,
    laplace_beltrami, laplace_beltrami_generators, monomial_exponents, radial_derivative,
    sphere_inner, sphere_mean, sphere_moment, HarmonicBasis, MAX_EXPLICIT_D, MAX_EXPLICIT_L,
};
pub use poly::{CompiledPoly, Exponent, MultiPoly, PowerTable};
pub use stein::{
    build_stein_kernel, stein_identity_residual, stein_identity_suite, KernelSample, Pairs,
    SteinKernelField, SteinReport, SteinResidual, TestFunction,
};
