//! Command-line pipeline around `quadseg`: phantoms with ground truth,
//! segmentation, segmentation metrics, and GDA train/project/eval.

pub mod commands;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod phantom;

pub use error::CliError;
