//! Two-tier fire-station siting: risk scoring, analytic sizing, candidate
//! generation, covering models solved by evolutionary search, indicators
//! and exact oracles for small instances.

pub mod config;
pub mod error;
pub mod evolutionary;
pub mod geometry;
pub mod instance;
pub mod io;
pub mod macro_model;
pub mod metrics;
pub mod micro_model;
pub mod oracle;
pub mod pipeline;
pub mod risk;
pub mod selection;
pub mod sizing;
pub mod synth;

pub use error::{Error, Result};
