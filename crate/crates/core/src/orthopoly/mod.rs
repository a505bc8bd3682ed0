//! One-dimensional orthogonal-polynomial machinery: the coordinate density,
//! Gegenbauer and Hermite bases, and activation expansions.

mod activation;
mod gegenbauer;
mod hermite;
pub mod quadrature;

pub use activation::{
    coordinate_second_moment, expand_activation, expand_activation_gegenbauer,
    expand_activation_with_basis, gaussian_deriv_moment, gegenbauer_tail_l2, hermite_coeffs,
    hermite_tail_crossover, hermite_tail_l2, Activation, ActivationExpansion, ActivationSpec,
    TailReport,
};
pub use gegenbauer::{harmonic_dim, GegenbauerBasis, Jet, RootDerivative, DEFAULT_LMAX_CEILING};
pub use hermite::{
    erf_gaussian_second_moment, erf_hermite_coeffs, hermite_monomials, hermite_values,
    relu_hermite_coeffs, HermiteBasis,
};
pub use quadrature::{coordinate_density, CoordinateQuadrature};
