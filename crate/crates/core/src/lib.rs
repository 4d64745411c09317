//! Coverage and rate of finite millimeter-wave networks.
//!
//! Transmitters and receivers are Poisson points in a disk. Links are LOS or
//! NLOS with a distance-dependent probability, antennas are sectored, fading
//! is Nakagami, and each receiver attaches to the transmitter with the largest
//! average received power. The crate computes the coverage probability and
//! ergodic rate of a receiver at any offset from the disk center two ways:
//! by numerical integration of the stochastic-geometry expressions
//! ([`analysis`]) and by direct simulation ([`montecarlo`]).

// `!(x > 0.0)` is used on purpose so that NaN fails the check too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// quadrature nodes and reference values are quoted at full published precision
#![allow(clippy::excessive_precision)]

pub mod analysis;
pub mod channel;
pub mod config;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod montecarlo;
pub mod par;
pub mod quadrature;

pub use channel::Tier;
pub use config::NetworkConfig;
pub use error::{Error, Result};
pub use par::Parallelism;
