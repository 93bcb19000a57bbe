//! Hyperbolic-parabolic chemotaxis on metric graphs with Kedem-Katchalsky
//! transmission conditions: network model, elliptic solver, time stepping
//! and stationary solutions.

pub mod boundary;
pub mod config;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod output;
pub mod stationary;

pub use config::Config;
pub use error::{Error, Result};
pub use graph::Network;
