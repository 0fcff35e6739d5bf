//! Random-matrix universality laboratory: ensembles, exact Gibbs free
//! energies by enumeration, replica-symmetric capacity, box-constrained LASSO,
//! Wishart spectra and paired Monte Carlo comparisons.

// `!(x > 0.0)` guards reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdma;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod lasso;
pub mod lindeberg;
pub mod numerics;
pub mod replica;
pub mod sk;
pub mod spectra;

pub use ensembles::{EnsembleSpec, Family, SampledMatrix, Scale};
pub use error::{Error, Result};
