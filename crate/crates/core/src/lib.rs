//! Evolutionary signaling games at desk scale.
//!
//! Lewis sender-receiver games with signal costs, subjective priors, and
//! channel noise; population and learning dynamics over them (replicator map
//! and flow, Roth-Erev urn reinforcement, best response with experimentation,
//! imitation on graphs); information-theoretic analysis and equilibrium
//! classification; and prebuilt scenarios covering costly signaling,
//! bottlenecked channels, persistent deception, reward gaming, and an
//! apology-augmented iterated prisoner's dilemma.

pub mod analysis;
pub mod dynamics;
mod error;
mod util;
pub mod game;
pub mod scenarios;

pub use error::{Error, Result};
