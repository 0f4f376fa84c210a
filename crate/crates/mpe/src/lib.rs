//! File formats and command-line front end for [`mpe_core`].
//!
//! Networks are stored as JSON: a list of variables with state labels and one
//! conditional table per variable, parents listed by name. Within a table the
//! first parent is the most significant digit and the child state varies
//! fastest.

pub mod cli;
pub mod error;
pub mod format;
pub mod output;

pub use error::CliError;
pub use format::{parse_evidence, parse_network, parse_targets, read_network, to_json};
