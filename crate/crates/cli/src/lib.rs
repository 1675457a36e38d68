//! Command-line and HTTP front end for toric patch certification.

pub mod commands;
pub mod patchfile;
pub mod render;
pub mod server;
