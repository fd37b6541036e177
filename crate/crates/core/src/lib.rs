//! Throughput-optimal random access for secondary users sharing a primary
//! user's channel under multipacket reception.
//!
//! - [`model`]: closed-form success probabilities, service rates, energies.
//! - [`oracle`]: Monte Carlo channel sampler and slot-level simulator.
//! - [`optimizer`]: multi-start search for the best access policy.
//! - [`config`], [`sweep`], [`verify`]: experiment plumbing behind the CLI.

pub mod config;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod parallel;
pub mod params;
pub mod rng;
pub mod sweep;
pub mod verify;

pub use error::{ConfigError, ModelError};
pub use model::{evaluate, link_rates, ThroughputReport};
pub use params::{AccessPolicy, Constraints, LinkRates, SystemParams};
