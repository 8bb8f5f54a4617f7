//! Files, CLI plumbing and the synthetic experiment harness around
//! [`rocrecal_core`].

pub mod calfile;
pub mod config;
pub mod dataset;
pub mod error;
pub mod harness;

pub use error::{AppError, Result};
