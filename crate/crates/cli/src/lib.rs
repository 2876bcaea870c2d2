//! Configuration, experiment pipeline and table output behind the `opcond`
//! binary.

pub mod config;
pub mod experiment;
pub mod table;
