//! File formats, configuration and the command implementations behind the
//! `metagl` binary. The numerical work lives in `metagl-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod extract;
pub mod formats;
pub mod logging;

pub use config::RunConfig;
pub use error::{Failure, FailureKind};
