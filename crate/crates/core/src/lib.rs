//! Exact symbolic engine for integrable hierarchies of double ramification
//! type: differential polynomials, local functionals, classical and quantum
//! brackets, the DR recursion, Miura transformations, ansatz solving, and
//! Gelfand–Dickey Lax calculus.

pub mod ansatz;
pub mod brackets;
pub mod error;
pub mod functionals;
pub mod lax;
pub mod oracle;
pub mod miura;
pub mod recursion;
pub mod ring;

pub use error::{Error, Result};
pub use ring::{Coefficient, DiffPoly, Gaussian, Mode, Monomial, Rational, RingContext, TruncationWindow};
