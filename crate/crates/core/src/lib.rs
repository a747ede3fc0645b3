//! Numerical toolkit for twisted sums of automorphic coefficients against
//! trace functions of composite modulus `q = q0*q1`.
//!
//! The crate is organised bottom-up:
//!
//! - [`residue`]: modular arithmetic, CRT data, primitive roots, roots of unity
//! - [`trace`]: trace-function tables, hyper-Kloosterman sums, Fourier transforms
//! - [`hecke`]: exact GL2 eigenform coefficients and their symmetric-square lift
//! - [`sums`]: smooth windows, twisted sums, summation-formula checks, bound formulas
//! - [`correlation`]: the complete exponential sums behind the bounds
//!
//! Every floating-point reduction goes through [`pairwise`], which fixes the
//! summation tree so that results do not depend on the number of threads.

pub mod correlation;
pub mod fft;
pub mod hecke;
pub mod pairwise;
pub mod residue;
pub mod rng;
pub mod sums;
pub mod trace;

pub use num_complex::Complex64;
