//! File formats, corpus loading, reports and the command implementations
//! behind the `causal-tree` binary. The scoring itself lives in
//! [`causal_tree_core`].

pub mod commands;
pub mod corpus;
pub mod error;
pub mod export;
pub mod report;
pub mod tables;

pub use error::CliError;
