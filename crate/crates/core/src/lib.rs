//! Numerical laboratory for mixed q-deformed Araki-Woods von Neumann algebras.
//!
//! Everything lives on a finite-dimensional complex Hilbert space `H` (dimension at
//! most 8) carrying a one-parameter orthogonal group `U_t`, split into blocks that are
//! coupled by a symmetric deformation matrix `Q = (q_ij)`. The Fock space is truncated
//! at a level cutoff `n_max`; every operator knows which of its columns are exact.
//!
//! Most of the algebra is generic over [`Field`], so the same code runs in floating
//! point (`Complex64`) and, for tracial setups, in exact rational arithmetic.

pub mod approx;
pub mod combinatorics;
pub mod error;
pub mod fock;
pub mod hilbert;
pub mod linalg;
pub mod modular;
pub mod moments;
pub mod sampling;
pub mod scalar;
pub mod ultra;
pub mod wick;

pub use error::{Error, Result};
pub use scalar::{Field, Rational, C64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
