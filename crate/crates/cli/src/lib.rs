//! IO, file formats, and batch runner around the core pipeline.

#![forbid(unsafe_code)]

pub mod commands;
pub mod corpus;
pub mod io;
pub mod profiles;
pub mod report;
