//! Towers of algorithms for spectral problems of bounded operators on l2(N).
//!
//! Operators are accessed only through matrix elements (plus class metadata such as a
//! dispersion bound or a resolvent control). Every tower returns finite, reproducible
//! output; the convergence semantics (from above, from below, or neither) are noted on
//! each routine.

pub mod error;
pub mod fractal;
pub mod linalg;
pub mod measure;
pub mod models;
pub mod operators;
pub mod par;
pub mod resolvent;
pub mod spectra;
pub mod towers_demo;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operators::{DispersionProfile, OperatorHandle, ResolventControl};
