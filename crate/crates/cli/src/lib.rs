//! Command-line driver and HTTP service for the guts solver.

pub mod commands;
pub mod manifest;
pub mod server;

pub use server::router;
