//! Spectral test of nonstationarity against long-memory stationarity.
//!
//! A stationary series with memory parameter `d` in (-1/2, 1/2) has low-frequency
//! periodogram ordinates that stay comparable to the sample variance, while an
//! integrated series (`d >= 1/2`) or one with a deterministic trend concentrates
//! variance at the lowest frequencies. This crate implements a parameter-free
//! test built on that contrast:
//!
//! - [`kernel`] constructs the limiting covariance matrices of the normalized
//!   DFT vector in all three regimes (stationary, 1/f boundary, integrated) by
//!   singular quadrature, plus their eigen-spectra.
//! - [`nulldist`] evaluates the weighted chi-square null law at the 1/f boundary
//!   (CDF by characteristic-function inversion, quantiles, Monte Carlo cross-check).
//! - [`stats`] computes the periodogram, normalized DFT vector, endpoint
//!   contrast, the two test statistics, and the decision rule.
//! - [`robinson`] implements the fractional-differencing comparison test
//!   (half-differencing, optional AR prewhitening, standardized log-periodogram
//!   average).
//! - [`dgp`] provides seeded generators for four long-memory data-generating
//!   processes and exact fractional-noise autocovariances.
//! - [`harness`] runs reproducible Monte Carlo rejection-rate experiments.
//! - [`cache`] persists kernel matrices and quantiles across CLI runs.
//! - [`cli`] wires everything into the `fracspec` executable.
//!
//! Every randomized entry point takes an explicit 64-bit seed and is
//! deterministic given that seed, independent of worker count.
//!
//! See the `examples/` directory for one runnable program per major capability.

pub mod cache;
pub mod cli;
pub mod dgp;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod nulldist;
pub mod rng;
pub mod robinson;
pub mod stats;

pub use error::{Error, Result};
