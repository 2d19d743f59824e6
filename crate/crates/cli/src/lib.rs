//! Command-line front end and HTTP job service for the gratis workbench.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod service;
