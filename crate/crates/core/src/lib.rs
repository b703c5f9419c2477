//! Numerical laboratory for dispersive and Strichartz estimates with structured
//! variable coefficients `L = -sum_i d_i (a_i(x_i) d_i)` on periodic grids.

// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coefficients;
pub mod dirac_transport;
pub mod error;
pub mod experiments;
pub mod export;
pub mod field;
mod fourier;
pub mod grid;
mod lanes;
pub mod operator1d;
pub mod norms;
pub mod phillips;
pub mod quadrature;
pub mod tensor_propagator;

pub use coefficients::{build_profile, profile_stats, CoefficientProfile, ProfileKind, ProfileSpec, ProfileStats};
pub use error::{LabError, Result};
pub use field::{Field, Trajectory};
pub use grid::Grid1D;
pub use operator1d::{assemble_operator, spectral_apply, DiscreteOperator1D, SpectralDecomposition1D, SpectralFunction};
pub use tensor_propagator::TensorOperator;
