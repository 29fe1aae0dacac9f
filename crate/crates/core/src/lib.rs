//! Analytic diagonalization of quasi-uniform tridiagonal matrices.
//!
//! A quasi-uniform tridiagonal (QUT) matrix is tridiagonal with a constant
//! diagonal and off-diagonal everywhere except in short boundary regions.
//! Its eigenvalues inside the band `[a − 2|b|, a + 2|b|]` are found as roots
//! of a scalar phase equation; eigenvalues outside come from a decaying
//! branch. Eigenvector boundary components are closed-form rational
//! functions of low-degree polynomials.
//!
//! ```
//! use qut::{diagonalize, QutMatrix, SolveOptions};
//!
//! let m = QutMatrix::from_edges(10, 0.0, 1.0, &[2.0], &[1.0], &[], &[]).unwrap();
//! let s = diagonalize(&m, SolveOptions::default()).unwrap();
//! assert_eq!(s.eigenvalues.len(), 10);
//! ```

pub mod chebyshev;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod polyengine;
pub mod presets;
pub mod qutmodel;
pub mod spectrum;

pub use chebyshev::{BandPoint, HyperbolicPoint, Side};
pub use error::{Error, Result};
pub use polyengine::{BoundaryPolynomials, Poly};
pub use qutmodel::{normalize, NormalizedQut, QutMatrix};
pub use spectrum::{diagonalize, RootMode, SolveOptions, SpectralMode, Spectrum};
