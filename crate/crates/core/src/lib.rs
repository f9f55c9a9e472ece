//! Markov processes with polynomial conditional moments.
//!
//! Exact symbolic machinery (structural matrices, orthogonal martingale
//! polynomials, quadratic harness coefficients) alongside numeric quadrature
//! over q-Gaussian laws and a Monte Carlo engine for the named processes.

pub mod exactalg;
pub mod harness;
pub mod mpr;
pub mod orthopoly;
pub mod qdensity;
pub mod simulate;

pub use exactalg::{MPoly, NumMatrix, Rational, TriMatrix};
