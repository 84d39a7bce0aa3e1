//! Special functions and numerical integration used by the analytical model.

mod expint;
mod hyper;
mod quadrature;
mod toeplitz;

pub use expint::{gen_exp_integral, upper_gamma};
pub use hyper::kummer_1f1;
pub use quadrature::{
    gamma_expectation, gauss_kronrod, gauss_laguerre, gauss_legendre, halton,
    integrate_nd, integrate_semi_infinite, Estimate, QuadratureSpec, Scheme,
};
pub use toeplitz::{lt_toeplitz_expm, lt_toeplitz_expm_column, lt_toeplitz_first_column_sum};
