//! Classical POMDPs and quantum observable MDPs (QOMDPs).
//!
//! The crate covers belief and density-matrix dynamics, exact finite-horizon
//! policy search, the encoding of quantum measurement occurrence instances as
//! goal QOMDPs, and goal-state reachability: decided exactly for goal POMDPs,
//! searched to a bounded depth for goal QOMDPs.

pub mod classical;
pub mod cli;
pub mod commands;
pub mod error;
pub mod model_file;
pub mod numerics;
pub mod quantum;
pub mod random;
pub mod reductions;
pub mod report;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result, Violation};
pub use numerics::{ComplexMatrix, ToleranceConfig, C64};
