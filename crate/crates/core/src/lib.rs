//! Workload estimation and dynamic load distribution for block-structured
//! coupled fluid/particle simulations.
//!
//! The pipeline is: a [`scenario`] produces per-block quantities over time,
//! the [`estimator`] turns them into predicted per-block runtimes, the
//! [`distribution`] algorithms assign blocks to processes, and [`metrics`]
//! scores the result. [`replay`] ties these together and [`cli`] exposes
//! them on the command line.

pub mod distribution;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod cli;
pub mod metrics;
pub mod replay;
pub mod scenario;

pub use error::{Error, Result};
pub use grid::{AdjacencyClass, Assignment, BlockGrid, BlockId, BlockQuantities};
