//! Correlated-twirling polarization stabilization for MDI-QKD.
//!
//! The crate simulates the relay's Bell-state measurement on exact density
//! matrices, twirls the relative channel rotation over a twelve-element
//! unitary 2-design, runs the event-level sifting protocol with look-up-table
//! reversal, evaluates guessing-probability bounds, and converts intrinsic
//! error into a maximum secure fiber length.

pub mod channel;
pub mod config;
pub mod csv;
pub mod design12;
pub mod error;
pub mod link_budget;
pub mod mdi;
pub mod protocol;
pub mod qmath;
pub mod sweep;

pub use error::{Error, Result};
