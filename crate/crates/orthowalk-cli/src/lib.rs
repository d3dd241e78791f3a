//! Library half of the CLI: configuration, serialization schemas, the
//! harmonic-polynomial registry, and the experiment implementations behind
//! each subcommand. The binary is a thin dispatcher over this crate.

pub mod config;
pub mod experiments;
pub mod harmonics;
pub mod schema;
