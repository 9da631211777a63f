//! Experiment runner and file formats for RIS-assisted THz downlink
//! load-balancing studies, built on [`thzsim_core`].

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod seeds;
pub mod stats;

pub use config::{parse_config, ExperimentConfig};
pub use experiment::{run_dynamic, run_static, DynamicResult, StaticResult, Technique};
