//! Equilibrium analysis of a population deciding whether to buy and enable a
//! firewall against intrusions that propagate between hosts.
//!
//! The [`model`] module holds the parameter types and closed-form utilities,
//! [`equilibrium`] locates thresholds and equilibria, [`dynamics`] integrates
//! the mean-field best-response dynamics and simulates a finite population,
//! and [`policy`] compares equilibria with social optima.

pub mod error;
pub mod model;
mod numeric;
pub mod equilibrium;
pub mod dynamics;
pub mod policy;
pub mod cli;

pub use error::{Error, Result};
pub use model::{AdoptionState, CostModel, FirewallProfile, ModelParams, ThreatEnvironment};
