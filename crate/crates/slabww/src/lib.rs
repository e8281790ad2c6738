//! Configuration, file formats, parallel execution and the command-line
//! front end for `slabww-core`.

pub mod cli;
pub mod config;
pub mod exec;
pub mod output;
pub mod reference_io;

pub use slabww_core as core;
