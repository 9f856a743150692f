//! Library surface of the command-line toolkit: everything the binary
//! does, callable in-process. The binary in `main.rs` is a thin argument
//! parser over these modules.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod encode;
pub mod ingest;
pub mod ppm;
pub mod report;
