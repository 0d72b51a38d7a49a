//! Experiment runner for relevant STFT sampling: TOML configs in, JSON and
//! text reports plus CSV grids out.

pub mod config;
pub mod experiments;
pub mod report;
