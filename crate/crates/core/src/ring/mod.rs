//! The graded ring of (quantum) differential polynomials.

pub mod coeff;
pub mod context;
pub mod json;
pub mod poly;
pub mod pretty;

pub use coeff::{bernoulli_numbers, binomial, binomial_signed, factorial, rat, Coefficient, Gaussian, Rational};
pub use context::{invert_matrix, Mode, RingContext, TruncationWindow};
pub use poly::{sum, DiffPoly, ExactDegree, Factor, Monomial};
