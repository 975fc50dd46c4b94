//! Perturbative algebraic quantum field theory on a finite 1+1 dimensional
//! lattice.
//!
//! A real scalar field lives on a periodic-in-space, finite-in-time grid.
//! Everything that is usually an analytic object (Green functions, the
//! Peierls bracket, the star product, time-ordered products, S-matrices,
//! interacting fields, the BV complex) becomes a finite computation whose
//! defining identities can be asserted exactly or to floating point
//! tolerance.
//!
//! Module map:
//!
//! - [`lattice`]: the spacetime grid and its discrete causal structure.
//! - [`fps`]: Laurent polynomials in ħ and truncated power series in λ.
//! - [`functionals`]: polynomial functionals with delta-supported kernels.
//! - [`dynamics`]: the Klein-Gordon operator, propagators, Lagrangians.
//! - [`quantization`]: Peierls bracket, star product, time ordering.
//! - [`perturbation`]: S-matrices, Bogoliubov's formula, axiom checks.
//! - [`bv`]: graded functionals, antibracket, Koszul/CE/BV differentials.
//! - [`nonpert`]: words in local S-matrices with S1-S3 rewriting.

pub mod bv;
pub mod dynamics;
pub mod error;
pub mod fps;
pub mod functionals;
pub mod lattice;
pub mod nonpert;
pub mod perturbation;
pub mod quantization;

pub use error::{Error, Result};
pub use num_complex::Complex64;
