//! File formats, data access, policy transports and the command line for
//! the tabletop diagnostic harness. The simulation itself lives in
//! `tabletop-core`.

pub mod cli;
pub mod data;
pub mod failure;
pub mod files;
pub mod pipeline;
pub mod source;
pub mod transcript;
pub mod transport;

pub use failure::{Failure, Result};
