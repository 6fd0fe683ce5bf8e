//! File formats, model persistence, the task pipeline and the command-line
//! interface on top of `trialml-core`.

pub mod cli;
pub mod io;
pub mod outputs;
pub mod persist;
pub mod pipeline;

pub use trialml_core as core;
