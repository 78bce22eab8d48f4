//! Library surface of the sweep driver, shared by the binary and the
//! integration tests.

pub mod commands;
pub mod grid;
pub mod validate;
