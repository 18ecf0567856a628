//! Front end of the `otaccel` binary: input loading, solver configuration,
//! benchmark batches and trace output.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 iteration limit (or a
//! failed gradient check), 3 invalid configuration.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use cli::{run, Cli};
pub use config::{GammaSpec, Method, Metric, RunConfig};
pub use error::{CliError, CliResult};
pub use otaccel::instances::grid_cost;
