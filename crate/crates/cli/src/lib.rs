//! Command-line front-end: workspace documents, the formula syntax and the
//! command implementations behind the `toposlos` binary.

pub mod app;
pub mod commands;
pub mod error;
pub mod schema;
pub mod syntax;
pub mod workspace;

pub use app::{run, Cli};
