//! Downlink transmit beamforming for cell-free integrated sensing and
//! communication: maximize the communication sum rate subject to sensing
//! beampattern-gain and per-AP power constraints.
//!
//! The solver lifts the per-AP power constraint into a unit-column
//! (oblique) manifold, handles the sensing constraints with an augmented
//! Lagrangian, and runs a Riemannian conjugate-gradient inner loop inside
//! an outer fractional-programming loop. Closed-form ZF/MMSE baselines, a
//! brute-force oracle for tiny instances, and a reproducible Monte Carlo
//! experiment harness round out the crate.

pub mod baselines;
pub mod error;
pub mod fp;
pub mod harness;
mod linalg;
pub mod manifold;
pub mod scenario;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
