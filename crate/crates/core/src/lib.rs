//! Analytical and Monte Carlo performance models for hybrid
//! ambient-backscatter / wireless-powered D2D links whose energy sources and
//! interferers form α-Ginibre point processes.

pub mod analytic;
pub mod error;
pub mod metrics;
pub mod monte_carlo;
pub mod params;
pub mod point_process;
pub mod quadrature;

pub use error::{Error, NumericError, Result};
pub use metrics::{Engine, Protocol, ProtocolMetrics};
pub use params::{normalize_config, validate, NetworkParams, RawConfig, Repulsion, ValidatedParams};
