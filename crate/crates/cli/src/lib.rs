//! Operator tooling for the medledger chain. The `medledger` binary is a
//! thin argument layer over these modules.

pub mod commands;
pub mod error;
pub mod keys;
pub mod scenario;

pub use error::{CliError, CliResult, ExitKind};
