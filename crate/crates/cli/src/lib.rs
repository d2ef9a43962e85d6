//! Configuration-driven runner for the Kato-class bound checks.

pub mod app;
pub mod config;
pub mod constants_table;
pub mod error;
pub mod oracle;
pub mod output;
pub mod pipeline;

pub use app::run;
pub use error::CliError;
