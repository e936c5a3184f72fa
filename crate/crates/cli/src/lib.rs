//! Library surface of the command-line driver: configuration parsing and
//! scheme execution, exposed so integration tests can drive runs in-process.

pub mod config;
pub mod run;
