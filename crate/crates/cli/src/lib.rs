//! Command line front end and local game service.

pub mod commands;
pub mod service;
