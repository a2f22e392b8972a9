//! Numerical laboratory for the two-dimensional q-Whittaker particle system
//! on the torus and its Gaussian (q → 1) limit.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: torus geometry, quotient particle labels, interlacing
//!   validation, crystalline data, Fourier modes and exhaustive enumeration.
//! - [`ctmc`]: the exact continuous-time Markov chain (rates, pushing,
//!   event-driven simulation) and the brute-force stationarity oracle.
//! - [`sde`]: the limiting linear SDE system, its Fourier symbols and
//!   spectral geometry, and an Euler–Maruyama integrator.
//! - [`correlations`]: finite-volume, infinite-volume and heat-kernel
//!   space-time covariances, stationary four-point covariances and the
//!   smoothed Gaussian free field variance.
//! - [`specfun`]: exponential integral, heat-kernel time integrals, the
//!   polylogarithm-type sums and the q-Pochhammer asymptotic expansion.

pub mod correlations;
pub mod ctmc;
pub mod error;
pub mod lattice;
pub mod quadrature;
pub mod sde;
pub mod specfun;

pub use error::{Error, Result};
