pub mod linalg;
pub mod logsumexp;
pub mod quadrature;
pub mod rng;

pub use linalg::Matrix;
pub use logsumexp::{logsumexp, LogSumExp, WeightedLogSumExp};
pub use quadrature::{gauss_hermite, gauss_legendre, gauss_legendre_on, Rule};
pub use num_complex::Complex64;
