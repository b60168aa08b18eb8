//! Numerical toolkit for elliptic special functions and the identities built on them.
//!
//! The crate is organized bottom-up:
//!
//! - [`theta`]: q-Pochhammer products, short theta functions, Jacobi theta
//!   functions with characteristics.
//! - [`gamma`]: the elliptic gamma function `Gamma_{p,q}` and the modified
//!   elliptic gamma function `G(u; omega)` valid on the unit circle `|q| = 1`.
//! - [`quad`]: trapezoidal contour quadrature on the unit circle with node
//!   doubling.
//! - [`integrals`]: elliptic hypergeometric integrals `I^(m)`, the elliptic
//!   beta integral, the V-function with its E7-type transformations,
//!   contiguous relations, and the elliptic hypergeometric equation.
//! - [`biorth`]: biorthogonal basis functions, generalized eigenvalue
//!   problems, the R-kernel, and overlap integrals.
//! - [`sklyanin`]: Sklyanin algebra generators as difference operators,
//!   Casimirs, modular doubles, and U_q(sl2) degenerations.
//! - [`heun`]: the difference Heun eigenvalue problem, Bethe ansatz solver,
//!   Weierstrass limit, van Diejen reduction, and zero modes.
//! - [`report`]: check registry, deterministic sampling, and JSON-lines
//!   residual reports backing the CLI.

pub mod biorth;
pub mod error;
pub mod gamma;
pub mod heun;
pub mod integrals;
pub mod quad;
pub mod report;
pub mod sklyanin;
pub mod theta;

pub use error::Error;

/// Relative residual of a relation written as "these terms sum to zero":
/// |sum| divided by the largest single-term magnitude. Normalizing by the
/// dominant term prevents false passes when every term is tiny.
pub fn residual_of_terms(terms: &[C64]) -> f64 {
    let sum: C64 = terms.iter().sum();
    let scale = terms.iter().map(|t| t.norm()).fold(0.0f64, f64::max).max(1e-300);
    sum.norm() / scale
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;
