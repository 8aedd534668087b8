//! Experiment configuration, orchestration, and result emission.

pub mod config;
pub mod run;
pub mod store;
